"""Prints one PASS/FAIL line per acceptance criterion after the run."""

CRITERIA = {
    "test_criterion_1": "golden worked example (2x3 reduction, optima -1)",
    "test_criterion_2": "round-trip property suite (200 instances, 10 samples/direction)",
    "test_criterion_3": "reflection dominance on 50 planted sign-flip instances",
    "test_criterion_4": "MILP exactness on 100 random GAP instances",
    "test_criterion_5": "worked 9x6 integer example trace and integral fibers",
    "test_criterion_6": "network soundness on 500 random ternary matrices",
    "test_criterion_7": "refinement scaling sanity (informative)",
    "test_criterion_8": "delta invariance and integer-delta integrality",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    seen = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance" not in rep.nodeid:
                continue
            for key, desc in CRITERIA.items():
                if key in rep.nodeid:
                    outcome = "PASS" if status == "passed" else "FAIL"
                    seen[key] = (outcome, desc)
    if seen:
        terminalreporter.write_sep("-", "acceptance criteria")
        for key in sorted(seen, key=lambda k: int(k.rsplit("_", 1)[1])):
            outcome, desc = seen[key]
            num = key.rsplit("_", 1)[1]
            terminalreporter.write_line(f"ACCEPTANCE {num}: {outcome} - {desc}")
