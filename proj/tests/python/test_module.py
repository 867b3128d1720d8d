"""Smoke tests of the Python bindings."""

import pytest

import jackmac


def test_encode_decode_roundtrip():
    for code in range(256):
        v = jackmac.decode(code, "fp8_e4m3")
        if v != 0:
            assert jackmac.encode(v, "fp8_e4m3") == code
    assert jackmac.decode(jackmac.encode(480.0, "fp8_e4m3"), "fp8_e4m3") == 480.0
    assert jackmac.decode(jackmac.encode(1e39, "bf16"), "bf16") == (2 - 2**-7) * 2.0**127


def test_mac_int8():
    out = jackmac.mac("int8", [1, 2, 3, 4], [1, 1, 1, 1])
    assert out["output_value"] == 10
    assert out["active_submodules"]["active"] == ["CSM"]


def test_mac_mx_scaling():
    x = [jackmac.encode(0.5, "mxint8"), jackmac.encode(0.25, "mxint8")]
    w = [jackmac.encode(-0.75, "mxint8")] * 2
    a = jackmac.mac("mxint8", x, w, ex=0, ey=0)["output_value"]
    b = jackmac.mac("mxint8", x, w, ex=2, ey=3)["output_value"]
    assert b == a * 32


def test_verify_and_structure():
    assert jackmac.verify("submul")["cases"] == 1024
    assert jackmac.verify("grouped-eq", trials=200, seed=3)["passed"]
    assert jackmac.structure_report("grouped", 16)["shifter_count"] == 4


def test_simulate():
    r = jackmac.simulate({"kind": "GEMM", "M": 1, "N": 1, "K": 1, "mode": "int4"})
    assert r["compute_cycles"] == r["fill_cycles"] + 1
    with pytest.raises(Exception):
        jackmac.simulate({"kind": "GEMM", "M": 1, "N": 1, "K": 64, "mode": "mxint4"}, {"preset": "BASELINE"})


def test_bad_inputs_raise():
    with pytest.raises(Exception):
        jackmac.mac("int8", [1, 2, 3], [1, 2, 3])
    with pytest.raises(Exception):
        jackmac.encode(1.0, "fp64")
