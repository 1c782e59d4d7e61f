"""Smoke test for the donorgraph extension module.

Build and install first:
    pip install -e crates/py --no-build-isolation
"""

import math

import donorgraph as dg


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    print("donorgraph", dg.__version__)

    line = dg.Graph.linear(3, 2)
    amps = line.state()
    minus = {k for k, a in enumerate(amps) if a.real < 0}
    assert minus == {0b011, 0b110}, minus
    assert line.verify(amps)["pass"]

    w = dg.Program.single_photon(3).execute()
    assert len(w) == 3
    assert all(c["pass"] for c in w.w_check())

    for make, target in [
        (dg.Program.six_ring, dg.Graph.ring(6, 3)),
        (dg.Program.ladder, dg.Graph.ladder(2, 3, 3)),
    ]:
        trace = make(3).execute()
        rep = trace.verify(target)
        assert rep["pass"], rep.get("notes")
        assert close(sum(trace.probabilities()), 1.0)

    sampled = dg.Program.linear(2, 3).execute(enumerate=False, seed=3)
    assert len(sampled) == 1
    assert sampled.verify(dg.Graph.linear(3, 2))["pass"]

    assert close(dg.success_probability(3), 1 / 6)
    fused = dg.fuse_chain_into_ring(3)
    assert fused["success"]

    cmp = dg.compare_schemes(4, "ring6")
    assert close(cmp["schemeA"]["expected_attempts"], 8.0)

    loss = dg.loss_success()
    assert abs(loss["loss"] - 0.0189) < 5e-4

    esr = dg.Program.from_json(dg.Program.linear(2, 2).to_json())
    budget = esr.budget("table1")
    assert 0 < budget["fidelity"] < 1

    mc = dg.monte_carlo_loss(6, 0.05, trials=20000)
    assert mc["sigmas"] <= 3.0
    assert close(mc["expected"], 0.95**6)

    assert len(dg.spectrum("single")) == 16
    assert len(dg.transitions("double", "esr")) == 64
    assert len(dg.transitions("double", "edsr", "weak-fixed")) == 7

    try:
        dg.Program.six_ring(9)
    except (ValueError, MemoryError):
        pass
    else:
        raise AssertionError("d=9 accepted")

    assert math.isfinite(loss["success_db"])
    print("all python smoke checks passed")


if __name__ == "__main__":
    main()
