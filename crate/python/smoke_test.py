"""Smoke test for the Python extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/pyproject.toml
    pip install target/wheels/extremal_arrays-*.whl
"""

import math
import tempfile

import extremal_arrays as ea


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    g = ea.Variogram.pair(1.5)
    assert g.k == 2 and g.rows() == [[0.0, 1.5], [1.5, 0.0]]
    cov = g.to_covariance(g.default_theta())
    assert cov[0][0] >= 0 and cov[0][1] == cov[1][0]

    # Hüsler–Reiss: Monte Carlo evaluator against the bivariate closed form
    for x in ([0.0, 0.0], [1.0, -0.5]):
        (est,) = ea.hr_cdf(g, [x], paths=50_000, seed=1)
        close(est.value, ea.hr_bivariate_cdf(1.5, *x), est.combined_error() + 1e-3)

    # one-dimensional min limit is 1 - G_gamma
    one = ea.Variogram([[0.0]])
    (s,) = ea.min_survival(one, [[0.4]], paths=20_000)
    (ie,) = ea.min_survival_ie(one, [[0.4]], paths=20_000)
    close(ie.value, 1.0 - ea.g_gamma_cdf(1.0, 0.4), 1e-12)
    close(s.value, ie.value, s.combined_error() + 1e-12)

    # Penrose–Kabluchko with S = 1 has exponential margins e^{-2x}
    (pk,) = ea.pk_survival(g, [[0.3, 1e-12]], paths=20_000)
    close(pk.value, math.exp(-0.6), pk.combined_error() + 1e-3)

    n = ea.min_norming("normal", 1000)
    # P{0 < X <= 1/a_n} = 1/n
    close(n["a_n"], 1000 / math.sqrt(2 * math.pi), 1e-3)
    m = ea.gumbel_norming("normal", 10_000, hazard=True)
    assert m["a_n"] > 0

    ex = ea.simulate_array({"gamma": [[0, 1], [1, 0]], "mode": "min_abs"}, n=200, reps=2000, seed=3)
    assert len(ex["values"]) == 2000 and all(len(r) == 2 and min(r) >= 0 for r in ex["values"])
    gamma, se = ea.rv_index_at_zero([r[0] for r in ex["values"]], 0.2)
    assert 0 < gamma < 3 and se > 0

    br = ea.simulate_br({"kernel": {"variogram": {"kind": "brownian"}}, "grid": [0, 1]}, reps=200, seed=4)
    assert len(br["values"]) == 200 and br["flag_rate"] < 0.05
    pkp = ea.simulate_pk(
        {"kernel": {"variogram": {"kind": "brownian"}, "variance": {"kind": "constant", "value": 1}}, "grid": [0, 1]},
        reps=200,
        seed=5,
    )
    assert all(v > 0 for row in pkp["values"] for v in row)

    report = ea.run_convergence(
        {
            "kind": "max-gumbel-convergence",
            "array": {"gamma": [[0, 1], [1, 0]], "gumbel_scaling": "hazard"},
            "n_schedule": [100, 1000],
            "reps": 2000,
        },
        seed=6,
    )
    assert len(report["rows"]) == 2 and isinstance(report["pass"], bool)

    with tempfile.TemporaryDirectory() as out:
        ok, csv, meta = ea.run_cli("norming", {"law": {"family": "normal"}, "rule": "minima", "n": [100]}, out, seed=1)
        assert ok and csv.name == "norming.csv" and meta.exists()

    try:
        ea.Variogram([[0.0, 1.0], [2.0, 0.0]])
    except ea.ExtremalError:
        pass
    else:
        raise AssertionError("asymmetric variogram accepted")
    try:
        ea.run_convergence({"kind": "min-convergence", "array": {"gamma": [[0, 1], [1, 0]]}, "n_schedule": [10], "reps": 5})
    except ea.ExtremalError as e:
        assert "E_INVARIANT" in str(e) and "reps" in str(e), e
    else:
        raise AssertionError("short run accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
