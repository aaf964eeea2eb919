import math
from pathlib import Path

import numpy as np
import pytest

import nlhet

CONFIGS = Path(__file__).resolve().parents[2] / "configs"

SMALL = """
[grid]
R = 40.0
h = 0.1
[kernel]
s = 0.5
"""


def test_parse_and_digest():
    a = nlhet.parse_config(SMALL)
    b = nlhet.parse_config(SMALL.replace("40.0", "40"))
    assert a.R == 40.0
    assert a.n % 2 == 1
    assert a.digest() == b.digest()
    assert len(a.digest()) == 64


def test_parse_error_is_raised():
    with pytest.raises(nlhet.ParseError, match="line 2"):
        nlhet.parse_config("[grid]\nbogus = 1\n")
    assert issubclass(nlhet.ParseError, nlhet.NlhetError)


def test_shipped_configs_verify():
    checks = nlhet.verify_model(nlhet.load_config(str(CONFIGS / "footnote.toml")))
    by_name = {c["name"]: c for c in checks}
    assert by_name["a_nondegenerate"]["pass"]
    assert by_name["a_nondegenerate"]["measured"] == pytest.approx(math.sqrt(2) * 0.5, abs=1e-9)
    bad = nlhet.verify_model(nlhet.load_config(str(CONFIGS / "gamma_declared.toml")))
    assert [c["name"] for c in bad if c["applicable"] and not c["pass"]] == ["a_nondegenerate"]


def test_solve_matches_explicit_layer():
    r = nlhet.solve(nlhet.parse_config(SMALL))
    assert r["converged"] and r["limit_pass"]
    assert r["x"].shape == r["q"].shape == r["qsharp"].shape
    shift, linf = nlhet.layer_fit(r["q"], 40.0)
    assert abs(shift) < 1e-3
    assert linf < 0.05
    for st in r["stages"]:
        assert np.all(np.diff(st["energies"]) <= 0.0)


def test_diagnostics_on_sampled_layer():
    x = np.linspace(-200.0, 200.0, 8001)
    q = nlhet.explicit_layer(x)
    np.testing.assert_allclose(q, math.pi + 2 * np.arctan(x), rtol=0, atol=1e-14)
    iv = nlhet.clean_intervals(q, 200.0, 0.05, [0.0, 2 * math.pi])
    assert len(iv) == 2
    assert iv[0][1] < 0 < iv[1][0]
    assert nlhet.tail_exponent(q, 200.0, "right", left=0.0, right=2 * math.pi) == pytest.approx(-1.0, rel=0.05)
    with pytest.raises(nlhet.NlhetError):
        nlhet.tail_exponent(q[:-1], 200.0)


def test_appendix_bench():
    r = nlhet.appendix_bench()
    assert r["pass"] and r["stable"]
    assert {t["family"] for t in r["tables"]}
