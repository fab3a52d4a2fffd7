"""Smoke test for the pymaskgrid extension.

Build and install with `pip install ./crates/python`, then run
`python python/smoke_test.py`.
"""

import math

import pymaskgrid as mg


def main():
    m = mg.Masker.builtin3()
    assert (m.da, m.db) == (3, 3)
    assert m.is_isometry()

    anchor_angles = [math.pi / 4, math.pi / 6, 2 * math.pi / 3, math.pi / 4]
    anchor = mg.angles_to_amplitudes(anchor_angles[:2], anchor_angles[2:])
    states = mg.omega_3d(anchor_angles, 20, seed=1)
    assert mg.is_masked_set(m, states)
    assert mg.masking_residual(m, states, anchor) < 1e-10

    rho_a, rho_b = m.reduced_states(states[0])
    assert abs(sum(rho_a[i][i] for i in range(3)) - 1) < 1e-12
    assert abs(rho_a[0][0].real - 0.5) < 1e-12

    xi = mg.xi_embed(states[0])
    assert len(xi) == 9 and abs(math.sqrt(sum(v * v for v in xi)) - 1) < 1e-12

    cons = mg.masking_constraints(m, anchor)
    assert all(abs(sum(a * x for a, x in zip(c["A"], xi)) + c["D"]) < 1e-10 for c in cons)

    report = mg.cascade_scan(m)
    assert report["branch"] == "SOLVABLE_PHASE_SHIFTED" and report["pair"] == [2, 3]

    sweep = mg.epsilon_sweep(m, anchor, [0.2, 0.1, 0.05, 0.025], 100_000, seed=7)
    assert len(sweep["estimates"]) == 4 and sweep["fit"]["slope"] > 1.0

    audit = mg.share_audit(m, states[:16], anchor)
    assert max(audit["leakage"].values()) < 1e-12
    assert min(audit["fidelities"]) >= 1 - 1e-10

    q = mg.Masker.qubit(0.0)
    circle = [mg.angles_to_amplitudes([x], [math.acos(0.5 / math.sin(2 * x))])
              for x in (0.3, 0.5, 0.7, 0.9, 1.1)]
    assert mg.is_masked_set(q, circle)
    found, objective, converged, trace = mg.optimize_masker(circle, seed=2)
    assert converged and objective < 1e-8 and trace[-1] == objective

    back = mg.Masker.from_json(m.to_json())
    assert back.apply(states[0]) == m.apply(states[0])

    fig = mg.figure("fig2a", 32)
    assert fig["rows"] and max(r[-1] for r in fig["rows"]) < 1e-9

    try:
        mg.Masker.from_json('{"dA": 2, "dB": 1, "columns": [[[1, 0]], [[1, 0]]]}')
    except mg.MaskgridError:
        pass
    else:
        raise AssertionError("non-isometry accepted")

    print("pymaskgrid", mg.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
