"""Smoke test for the gradcodec Python module.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import math
import random

import gradcodec


def check_dithering_example():
    op = gradcodec.Operator("dsd", nu=0.1)
    enc = op.compress([3.0, 4.0])
    assert abs(enc.reconstructed[0] - 2.2) < 1e-6 and abs(enc.reconstructed[1] - 4.4) < 1e-6
    assert abs(enc.distortion - 0.032) < 1e-6
    assert op.decompress(enc.container()) == enc.reconstructed
    assert op.operator_class(2) == "C(0.1)", op.operator_class(2)


def check_round_trips():
    rng = random.Random(3)
    ops = [
        gradcodec.Operator("identity"),
        gradcodec.Operator("rsd", nu=0.25, seed=5),
        gradcodec.Operator("sc", alpha=0.8, seed=5),
        gradcodec.Operator("topk", k=3),
        gradcodec.Operator("natural", seed=5),
    ]
    for i in range(50):
        x = [rng.gauss(0.0, 1.0) for _ in range(8)]
        for op in ops:
            enc = op.compress(x, message=i)
            assert enc.bits == len(enc.bit_string)
            assert op.decompress(enc.container(), message=i) == enc.reconstructed


def check_errors():
    try:
        gradcodec.Operator("dsd", nu=0.1).decompress(b"GCV1\x2a\x02\x00\x00\x00\x00\x00\x00\x00")
    except gradcodec.DecodeError as e:
        assert "unknown operator tag" in str(e)
    else:
        raise AssertionError("expected DecodeError")
    try:
        gradcodec.Operator("fft")
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")


def check_bounds():
    assert abs(gradcodec.cap_probability(0.5, 2) - 0.25) < 1e-12
    assert abs(gradcodec.cap_probability(0.5, 3) - 0.5 * (1 - math.sqrt(0.5))) < 1e-12
    assert 1.04 <= gradcodec.theorem2_rhs(1000) <= 1.06
    rows = {r["method"]: r["savings"] for r in gradcodec.savings_table(1000, 10)}
    assert abs(rows["Randomized SD (omega=1/4)"] - 9.9) < 0.01


def check_descent():
    basic = gradcodec.cgd("synth:ridge,d=20,n=80", gradcodec.Operator("identity"))
    dsd = gradcodec.cgd("synth:ridge,d=20,n=80", gradcodec.Operator("dsd", nu=0.1))
    assert basic["status"] == dsd["status"] == "converged"
    assert dsd["total_bits"] < basic["total_bits"]
    assert dsd["rows"][0] == (0, 0, 1.0, 0.0)
    assert dsd["csv"].splitlines()[0] == "# label: dsd(nu=0.1)"


def check_selftest():
    results = gradcodec.selftest([10])
    assert results[0][0] == 10 and results[0][1], results


if __name__ == "__main__":
    check_dithering_example()
    check_round_trips()
    check_errors()
    check_bounds()
    check_descent()
    check_selftest()
    print("gradcodec", gradcodec.__version__, "python smoke test passed")
