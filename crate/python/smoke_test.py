"""Smoke test for the Python bindings.

Build and install first:

    pip install maturin
    maturin develop -m crates/python/Cargo.toml
"""
import math
import tempfile

import minmax_tori as mt


def main():
    n = 16
    r = mt.uniformize([4.0] * n * n, [0.0] * n * n, [1.0] * n * n, n, n, tol=1e-12)
    assert abs(r["tau"] - 0.5j) < 1e-8, r

    tau, (a, b, c, d) = mt.reduce_mark(3.3 + 0.2j)
    assert a * d - b * c == 1
    assert abs(tau) >= 1 and -0.5 < tau.real <= 0.5
    assert abs((a * (3.3 + 0.2j) + b) / (c * (3.3 + 0.2j) + d) - tau) < 1e-10

    # Clifford torus
    n = 64
    values = []
    for i in range(n):
        for j in range(n):
            x, y = j / n, i / n
            values += [math.cos(2 * math.pi * x), math.sin(2 * math.pi * x),
                       math.cos(2 * math.pi * y), math.sin(2 * math.pi * y)]
    values = [v / math.sqrt(2) for v in values]
    e, area = mt.energy_and_area(values, n, n, 4)
    assert abs(e - 2 * math.pi ** 2) < 1e-2 and e >= area - 1e-12, (e, area)

    assert "clifford" in mt.scenarios()
    with tempfile.TemporaryDirectory() as out:
        summary = mt.run("grid = 16\nsamples = 8\nrounds = 1\nfamily_stride = 4\ntime_stride = 2\n",
                         scenario="constant", out=out)
        assert summary["initial_max_energy"] == 0.0
        assert summary["rounds"] and summary["bubbles"]["verdict"] is not None

    try:
        mt.run("colour = 1\n")
    except ValueError as e:
        assert "colour" in str(e)
    else:
        raise AssertionError("unknown config key accepted")
    print("python smoke test ok")


if __name__ == "__main__":
    main()
