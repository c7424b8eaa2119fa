"""Print one PASS/FAIL line per acceptance criterion after the run."""

CRITERIA = {
    "test_criterion_1_euler_identity": "1 Euler identity across seeded densities",
    "test_criterion_2_propriety": "2 nonnegative divergences, strict where promised",
    "test_criterion_3_derivative_is_expected_score": "3 FD derivative matches expected score",
    "test_criterion_4_closed_form_spot_checks": "4 closed-form spot checks",
    "test_criterion_5_integration_by_parts": "5 integration by parts and surface decay",
    "test_criterion_6_directional_derivative_structure": "6 directional-derivative structure",
    "test_criterion_7_gateaux_differentiability": "7 Gateaux differentiability (quadratic)",
    "test_criterion_8_boundary_pathologies": "8 boundary pathologies",
    "test_criterion_9_byte_identical_reports": "9 byte-identical verification reports",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[str, bool] = {}
    for key, ok in (("passed", True), ("failed", False), ("error", False)):
        for report in terminalreporter.stats.get(key, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid or getattr(report, "when", "call") != "call":
                continue
            name = nodeid.rsplit("::", 1)[-1]
            if name in CRITERIA:
                outcomes[name] = ok and outcomes.get(name, True)
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, label in CRITERIA.items():
        if name in outcomes:
            verdict = "PASS" if outcomes[name] else "FAIL"
            terminalreporter.write_line(f"[{verdict}] criterion {label}")
