"""Smoke test for the innovcp Python extension.

Build and stage the module next to this script first:

    cargo build --release -p innovcp-py
    cp target/release/libinnovcp.so python/innovcp.so
"""

import math
import os
import tempfile

import innovcp


def main():
    table = innovcp.NullTable.build(grid=32, reps=2000, seed=1)
    assert len(table) == 2000 and table.grid_size == 32
    q95 = table.quantile(0.95)
    assert 0.5 < q95 < 1.0, q95
    assert table.p_value(0.0) == 1.0

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "null.txt")
        table.save(path)
        again = innovcp.NullTable.load(path)
        assert again.quantile(0.95) == q95

    x = innovcp.simulate("ar1-half", n=200, seed=3)
    assert len(x) == 201 and x == innovcp.simulate("ar1-half", n=200, seed=3)

    fitted = innovcp.fit(x)
    assert len(fitted["residuals"]) == 200
    for r, s, m, y in zip(fitted["residuals"], fitted["sigma_hat"], fitted["m_hat"], x[1:]):
        assert math.isclose(r * s + m, y, rel_tol=1e-12, abs_tol=1e-12)

    report = innovcp.run_test(x, table=table)
    assert 0.0 < report["p_value"] <= 1.0
    assert 1 <= report["changepoint_index"] < 200
    homo = innovcp.run_test(x, mode="homo", weight="interval:-2,2,0.5")
    assert homo["p_value"] is None and homo["stat"] >= 0.0

    shifted = innovcp.generate(
        """
        model = "ar1-half"
        n = 200
        seed = 5
        theta0 = 0.5
        [pre_change]
        family = "std-normal"
        [post_change]
        family = "mean-mixture"
        zeta = 1.0
        """
    )
    changed = innovcp.run_test(shifted, table=table)
    assert changed["stat"] > report["stat"], (changed["stat"], report["stat"])

    same = innovcp.ks_process([0.1, 0.2, 0.3, 0.4])
    flipped = innovcp.ks_process([0.4, 0.3, 0.2, 0.1])
    assert same["stat"] == flipped["stat"]

    assert innovcp.simulate_sheet_sup(32, 7) == innovcp.simulate_sheet_sup(32, 7)

    rows = innovcp.run_study(
        'family = "ar1-mean-mixture"\nzetas = [0.0]\nn_values = [50]\nreplications = 20\n', table
    )
    assert len(rows) == 1 and 0.0 <= rows[0]["rejection_rate"] <= 1.0

    try:
        innovcp.fit([1.0, 2.0], mode="sideways")
    except ValueError:
        pass
    else:
        raise AssertionError("invalid mode accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
