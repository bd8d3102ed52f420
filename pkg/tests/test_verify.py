import pytest

from pfaffwalk import verify


@pytest.mark.parametrize("name", sorted(verify.SUITES))
def test_suite_passes_at_default_tolerance(name):
    checks = verify.run_suite(name)
    assert checks
    for c in checks:
        assert c.passed, c.line()


def test_check_line_and_failure():
    good = verify.Check("x", 1e-12, 1e-9)
    bad = verify.Check("y", 1.0, 1e-9)
    assert good.passed and not bad.passed
    assert good.line().startswith("PASS") and bad.line().startswith("FAIL")
    assert not all(c.passed for c in verify.run_suite("pfaffian", 1e-30))


def test_unknown_suite():
    with pytest.raises(ValueError, match="unknown suite"):
        verify.run_suite("everything")
