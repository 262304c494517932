"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line.  Run with ``pytest tests/test_acceptance.py -v -s``."""

import math
import time

import numpy as np
import pytest

from netinv import (
    BregmanLoss,
    Conv2d,
    ConvTranspose2d,
    DenseAffine,
    L1Penalty,
    Layer,
    Network,
    NonNegIndicator,
    Prng,
    PdhgConfig,
    SquaredL2,
    ZeroPenalty,
    coordinate_descent_invert,
    div_field,
    grad_image,
    make_rate_problem,
    pdhg_invert_perceptron,
    rate_experiment,
    synthetic_shapes,
    psnr,
)
from netinv.experiments import run_circle, sweep_noise_levels
from netinv.formats import (
    network_from_bytes,
    network_to_bytes,
    read_idx_raw,
    read_network,
    read_tensor,
    write_idx,
    write_network,
    write_tensor,
)
from netinv.training import TrainConfig, train_conv_autoencoder


def report(num, label, passed, detail=""):
    tag = "PASS" if passed else "FAIL"
    print(f"[criterion {num}] {tag}: {label}" + (f" ({detail})" if detail else ""))
    assert passed, f"criterion {num} failed: {label} {detail}"


class TestCriterion1Rate:
    def test_rate_verification(self):
        start = time.perf_counter()
        layer, v_dag = make_rate_problem(8, 32, seed=0)
        deltas = np.geomspace(1e-1, 1e-4, 7)
        for c in (0.5, 1.0):
            rows = rate_experiment(layer, v_dag, c, deltas, seed=0)
            for r in rows:
                assert r.d_sym <= r.bound, (
                    f"c={c}: d_sym {r.d_sym} > bound {r.bound} at {r.delta}"
                )
            slope = np.polyfit(
                np.log([r.delta for r in rows]),
                np.log([r.d_sym for r in rows]), 1,
            )[0]
            report(1, f"error bound holds, slope >= 0.8 (c={c})",
                   slope >= 0.8, f"slope={slope:.3f}")
        elapsed = time.perf_counter() - start
        report(1, "runtime < 30 s", elapsed < 30.0, f"{elapsed:.1f}s")


class TestCriterion2Circle:
    @pytest.mark.parametrize("seed", range(5))
    def test_orderings_per_seed(self, seed, tmp_path):
        cfg = {
            "size": 64, "radius_frac": 0.25, "measurements": 512,
            "noise_std": 0.005, "alpha": 1.5e-2, "max_iters": 10000,
            "stop_tol": 1e-5, "tau_disc": 1.0, "seed": seed,
            "out_dir": str(tmp_path / f"circle{seed}"),
        }
        start = time.perf_counter()
        failures = run_circle(cfg)
        elapsed = time.perf_counter() - start
        report(2, f"tv/l2 orderings hold for seed {seed}",
               failures == [], "; ".join(failures))
        report(2, f"runtime < 5 min for seed {seed}", elapsed < 300.0,
               f"{elapsed:.0f}s")


class TestCriterion3Tikhonov:
    def test_pdhg_matches_closed_form(self):
        rng = Prng(7)
        alpha = 0.1
        worst_gap, worst_res = 0.0, 0.0
        for _ in range(20):
            w, b, y = rng.normal((8, 8)), rng.normal((8,)), rng.normal((8,))
            layer = Layer(DenseAffine(w, b), ZeroPenalty())
            cfg = PdhgConfig.for_layer(layer.op, alpha, SquaredL2(),
                                       max_iters=300000, stop_tol=1e-11)
            x, _ = pdhg_invert_perceptron(layer, y, SquaredL2(), cfg)
            oracle = np.linalg.solve(w.T @ w + alpha * np.eye(8), w.T @ (y - b))
            worst_gap = max(worst_gap, float(np.linalg.norm(x - oracle)))
            res = np.linalg.norm(w.T @ (w @ x + b - y) + alpha * x)
            worst_res = max(worst_res, res / (1.0 + np.linalg.norm(x)))
        report(3, "matches Tikhonov closed form on 20 instances",
               worst_gap < 1e-5, f"worst gap {worst_gap:.2e}")
        report(3, "stationarity residual <= 1e-5 (1 + ||x||)",
               worst_res <= 1e-5, f"worst {worst_res:.2e}")


class TestCriterion4CoordinateDescent:
    def test_lifted_objective_monotone_100_sweeps(self):
        rng = Prng(42)

        def relu_layer(m, n):
            w = rng.uniform_signed(1.0 / math.sqrt(n), (m, n))
            return Layer(DenseAffine(w, rng.uniform_signed(0.2, (m,))),
                         NonNegIndicator())

        net = Network([relu_layer(12, 16), relu_layer(10, 12), relu_layer(8, 10)])
        y = net.forward(rng.normal((16,)))
        y = np.maximum(0.0, y + Prng(43).normal(y.shape, std=0.01))
        _, _, rep = coordinate_descent_invert(net, y, SquaredL2(), alpha=1e-2,
                                              outer_iters=100)
        h = np.array(rep.residual_history)
        assert len(h) == 100
        worst = float(np.max(np.maximum(0.0, h[1:] - h[:-1])))
        report(4, "lifted objective non-increasing over 100 sweeps",
               worst <= 1e-10, f"worst increase {worst:.2e}")


class TestCriterion5InvariantSuite:
    def test_numerical_invariants(self):
        start = time.perf_counter()
        rng = Prng(0)

        # gradient/divergence adjoint identity
        ok = True
        for _ in range(50):
            x = rng.normal((6, 7))
            z = rng.normal((6, 7, 2))
            lhs = float(np.sum(grad_image(x) * z))
            rhs = -float(np.sum(x * div_field(z)))
            ok &= abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))
        report(5, "grad/div adjoint identity to 1e-10", ok)

        # dense and convolution adjoint identities
        ok = True
        dense = DenseAffine(rng.normal((9, 13)), rng.normal((9,)))
        conv = Conv2d(rng.normal((3, 2, 4, 4)), (10, 10), stride=2, padding=1,
                      bias=rng.normal((3,)))
        convt = ConvTranspose2d(rng.normal((3, 2, 4, 4)), (5, 5), stride=2,
                                padding=1, bias=rng.normal((2,)))
        for op in (dense, conv, convt):
            zero = op.forward(np.zeros(op.input_shape))
            for _ in range(20):
                xx = rng.normal(op.input_shape)
                uu = rng.normal(op.output_shape)
                lhs = float(np.sum((op.forward(xx) - zero) * uu))
                rhs = float(np.sum(xx * op.adjoint(uu)))
                ok &= abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))
        report(5, "operator adjoint identities to 1e-10", ok)

        # Bregman loss gradient vs central differences
        ok = True
        h = 1e-6
        for pen in (ZeroPenalty(), NonNegIndicator(), L1Penalty(0.5)):
            loss = BregmanLoss(pen)
            checked = 0
            while checked < 5:
                z = rng.normal((4,), std=2.0)
                if np.any(np.abs(z) < 1e-3) or np.any(
                    np.abs(np.abs(z) - getattr(pen, "lam", 0.0)) < 1e-3
                ):
                    continue
                x = pen.prox(rng.normal((4,), std=2.0))
                g = loss.grad_z(x, z)
                for i in range(4):
                    e = np.zeros(4)
                    e[i] = h
                    fd = (loss.loss(x, z + e) - loss.loss(x, z - e)) / (2 * h)
                    ok &= abs(fd - g[i]) <= 1e-4
                checked += 1
        report(5, "Bregman gradient matches finite differences to 1e-4", ok)

        # conjugate identity in dimension 2 via grid search
        ok = True
        grid = np.arange(-2.5, 2.5 + 1e-3, 2.5e-3)
        for pen, y, w in (
            (NonNegIndicator(), np.array([0.6, 0.8]), np.array([0.4, 0.3])),
            (ZeroPenalty(), np.array([0.3, -0.4]), np.array([0.5, 0.2])),
        ):
            cs1 = np.array([pen.conjugate_shifted(np.array([g])) for g in grid])
            base = 0.5 * float(y @ y) + pen.eval(y)
            loss_grid = (base + cs1[:, None] + cs1[None, :]
                         - np.add.outer(y[0] * grid, y[1] * grid))
            sup = float(np.max(np.add.outer(w[0] * grid, w[1] * grid) - loss_grid))
            shifted = lambda v: 0.5 * float(v @ v) + pen.eval(v)
            ok &= abs(sup - (shifted(y + w) - shifted(y))) <= 1e-3
        report(5, "conjugate identity (grid search, dim 2) to 1e-3", ok)

        # prox non-expansiveness on 1000 random pairs
        ok = True
        pens = (ZeroPenalty(), NonNegIndicator(), L1Penalty(0.7))
        for i in range(1000):
            pen = pens[i % 3]
            z1 = rng.normal((5,), std=3.0)
            z2 = rng.normal((5,), std=3.0)
            ok &= (np.linalg.norm(pen.prox(z1) - pen.prox(z2))
                   <= np.linalg.norm(z1 - z2) + 1e-12)
        report(5, "prox non-expansive on 1000 pairs", ok)

        elapsed = time.perf_counter() - start
        report(5, "suite runtime < 60 s", elapsed < 60.0, f"{elapsed:.1f}s")


class TestCriterion6NoiseSweep:
    def test_sweep_trend_and_decoder_comparison(self):
        start = time.perf_counter()
        data = synthetic_shapes(1005, seed=11)
        train, held_out = data[:1000], data[1000:]
        cfg = TrainConfig(learning_rate=1e-3, epochs=5, batch_size=32, seed=5)
        encoder, decoder, final_mse = train_conv_autoencoder(train, cfg)
        digits = [held_out[i] for i in range(5)]
        rows = sweep_noise_levels(
            encoder, decoder, digits,
            stds=np.linspace(0.0, 0.33, 8),
            alphas=np.geomspace(1e-4, 1e-2, 10),
            seed=5, outer_iters=120, inner_iters=50, jobs=2,
        )
        for r in rows:
            print(f"    delta^2={r['delta_sq']:8.3f} "
                  f"alpha={r['best_alpha']:.2e} "
                  f"inv={r['psnr_inverted']:6.2f} dB "
                  f"dec={r['psnr_decoded']:6.2f} dB")
        slack = 0.5
        monotone = all(
            rows[j + 1]["psnr_inverted"] <= rows[j]["psnr_inverted"] + slack
            for j in range(len(rows) - 1)
        )
        report(6, "inversion PSNR non-increasing in delta^2 (0.5 dB slack)",
               monotone)
        lowest = rows[0]
        wins = sum(
            inv > dec
            for inv, dec in zip(lowest["per_digit_inverted"],
                                lowest["per_digit_decoded"])
        )
        report(6, "inversion beats decoder at lowest noise for >= 4/5 digits",
               wins >= 4, f"{wins}/5")
        elapsed = time.perf_counter() - start
        report(6, "runtime < 20 min", elapsed < 1200.0, f"{elapsed:.0f}s")


class TestCriterion7Formats:
    def test_round_trips_bit_exact(self, tmp_path):
        rng = Prng(1)

        tensor = rng.normal((4, 5, 2))
        tpath = tmp_path / "t.lbtf"
        write_tensor(tpath, tensor)
        write_tensor(tmp_path / "t2.lbtf", read_tensor(tpath))
        tensors_ok = (tmp_path / "t2.lbtf").read_bytes() == tpath.read_bytes()
        report(7, "tensor file round trip bit-exact", tensors_ok)

        net = Network([
            Layer(Conv2d(rng.normal((8, 1, 4, 4)), (28, 28), 2, 1,
                         rng.normal((8,))), NonNegIndicator()),
            Layer(DenseAffine(rng.normal((10, 1568)), rng.normal((10,)),
                              input_shape=(8, 14, 14)), NonNegIndicator()),
        ])
        npath = tmp_path / "n.lbnn"
        write_network(npath, net)
        back = read_network(npath, input_shape=(1, 28, 28))
        nets_ok = network_to_bytes(back) == npath.read_bytes()
        x = rng.normal((1, 28, 28))
        nets_ok &= bool(np.array_equal(back.forward(x), net.forward(x)))
        report(7, "model archive round trip bit-exact", nets_ok)

        raw = (rng.uniform((6, 9, 9)) * 255).astype(np.uint8)
        ipath = tmp_path / "imgs.idx"
        write_idx(ipath, raw)
        write_idx(tmp_path / "imgs2.idx", read_idx_raw(ipath))
        idx_ok = (tmp_path / "imgs2.idx").read_bytes() == ipath.read_bytes()
        labels = np.arange(17, dtype=np.uint8)
        lpath = tmp_path / "l.idx"
        write_idx(lpath, labels)
        write_idx(tmp_path / "l2.idx", read_idx_raw(lpath))
        idx_ok &= (tmp_path / "l2.idx").read_bytes() == lpath.read_bytes()
        report(7, "IDX round trips bit-exact", idx_ok)
