"""Experiment drivers behind the ``invert`` command line tool.

Each runner takes a resolved configuration, writes its artifacts (PGM
images and CSV tables) into the output directory, prints a short summary
and returns the list of failed in-command assertions (empty on success).
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .data import NoiseSpec, add_noise, center_dataset, circle_phantom, psnr, synthetic_shapes
from .formats import load_idx, read_network, read_tensor, write_csv, write_network, write_pgm, write_tensor
from .linops import DenseAffine, operator_norm_sq
from .network import Layer, Network
from .penalties import NonNegIndicator
from .regularizers import TotalVariation
from .rng import Prng
from .solvers import (
    PdhgConfig,
    RateBoundError,
    coordinate_descent_invert,
    landweber_invert,
    make_rate_problem,
    pdhg_invert_perceptron,
    rate_experiment,
)
from .training import TrainConfig, train_conv_autoencoder, train_dense_autoencoder
from .tv import tv_norm

DATA_DIR_ENV = "LB_DATA_DIR"


def parse_grid(spec: str):
    """Parse 'start:stop:geometric:count' (or 'linear') into a value grid."""
    parts = spec.split(":")
    if len(parts) != 4:
        raise ValueError(
            f"grid spec must look like 1e-1:1e-4:geometric:7, got {spec!r}"
        )
    start, stop = float(parts[0]), float(parts[1])
    scale, count = parts[2], int(parts[3])
    if count < 1:
        raise ValueError("grid needs at least one point")
    if scale == "geometric":
        return np.geomspace(start, stop, count)
    if scale == "linear":
        return np.linspace(start, stop, count)
    raise ValueError(f"unknown grid scale {scale!r}")


def load_images(data_choice, needed, seed):
    """Images for training/evaluation: MNIST when available, else the
    synthetic piecewise-constant set.  Returns (images, source name)."""
    data_dir = os.environ.get(DATA_DIR_ENV, "")
    idx_path = Path(data_dir) / "train-images-idx3-ubyte" if data_dir else None
    if data_choice in ("auto", "mnist") and idx_path is not None and idx_path.exists():
        images = load_idx(idx_path)
        if len(images) < needed:
            raise ValueError(
                f"dataset at {idx_path} holds {len(images)} images, need {needed}"
            )
        return np.asarray(images[:needed], dtype=np.float64), "mnist"
    if data_choice == "mnist":
        raise FileNotFoundError(
            f"no MNIST IDX file found; set ${DATA_DIR_ENV} to a directory "
            "containing train-images-idx3-ubyte"
        )
    return synthetic_shapes(needed, seed=seed + 7700), "synthetic"


def _outdir(cfg):
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _check(failures, condition, label):
    status = "ok" if condition else "FAILED"
    print(f"  assert {label}: {status}")
    if not condition:
        failures.append(label)


def _display(img):
    return np.clip(img, 0.0, 1.0)


# ---------------------------------------------------------------------------
# circle

def run_circle(cfg):
    out = _outdir(cfg)
    size = cfg["size"]
    seed = cfg["seed"]
    truth = circle_phantom(size, size, cfg["radius_frac"], 1.0)
    rng = Prng(seed)
    n = size * size
    scale = 1.0 / math.sqrt(n)
    weight = rng.uniform_signed(scale, (cfg["measurements"], n))
    bias = rng.uniform_signed(scale, (cfg["measurements"],))
    layer = Layer(
        DenseAffine(weight, bias, input_shape=(size, size)), NonNegIndicator()
    )
    z_clean = layer.op.forward(truth)
    y = np.maximum(0.0, z_clean)
    y_delta, delta_sq = add_noise(
        y,
        NoiseSpec(std=cfg["noise_std"], seed=seed + 1, clip_nonneg=True),
        penalty=layer.penalty,
        pre_activation=z_clean,
    )
    delta_l2 = float(np.linalg.norm(y_delta - y))
    print(f"circle: {size}x{size}, {cfg['measurements']} measurements, "
          f"noise std {cfg['noise_std']:g}, delta^2 {delta_sq:.3e}")

    x_lw, rep_lw = landweber_invert(
        layer, y_delta, delta=delta_l2, tau_disc=cfg["tau_disc"],
        max_iters=cfg["max_iters"],
    )
    print(f"  landweber: {rep_lw.iterations} iters ({rep_lw.stop_reason})")
    reg = TotalVariation()
    pdhg_cfg = PdhgConfig.for_layer(
        layer.op, cfg["alpha"], reg, max_iters=cfg["max_iters"],
        stop_tol=cfg["stop_tol"],
    )
    x_tv, rep_tv = pdhg_invert_perceptron(layer, y_delta, reg, pdhg_cfg)
    print(f"  tv-pdhg: {rep_tv.iterations} iters ({rep_tv.stop_reason}), "
          f"alpha={cfg['alpha']:g}")

    write_pgm(truth, out / "truth.pgm")
    write_pgm(_display(x_lw), out / "landweber.pgm")
    write_pgm(_display(x_tv), out / "tv.pgm")
    metrics = [
        ("truth", np.linalg.norm(truth), tv_norm(truth)),
        ("landweber", np.linalg.norm(x_lw), tv_norm(x_lw)),
        ("tv", np.linalg.norm(x_tv), tv_norm(x_tv)),
    ]
    write_csv(metrics, out / "metrics.csv", header=["image", "l2_norm", "tv_seminorm"])
    for name, l2v, tvv in metrics:
        print(f"  {name:10s} l2={l2v:8.3f}  tv={tvv:9.3f}")

    tv_t, tv_l, tv_r = tv_norm(truth), tv_norm(x_lw), tv_norm(x_tv)
    l2_t, l2_l, l2_r = (np.linalg.norm(truth), np.linalg.norm(x_lw),
                        np.linalg.norm(x_tv))
    failures = []
    _check(failures, tv_r < tv_t, "tv(tv-recon) < tv(truth)")
    _check(failures, tv_t < tv_l, "tv(truth) < tv(landweber)")
    _check(failures, abs(l2_r - l2_t) < abs(l2_l - l2_t),
           "l2(tv-recon) closer to l2(truth) than l2(landweber)")
    return failures


# ---------------------------------------------------------------------------
# rate verification

def run_rate(cfg):
    out = _outdir(cfg)
    layer, v_dag = make_rate_problem(cfg["n_out"], cfg["n_in"], cfg["seed"])
    deltas = parse_grid(cfg["deltas"])
    failures = []
    try:
        rows = rate_experiment(layer, v_dag, cfg["c"], deltas, seed=cfg["seed"],
                               max_iters=cfg["max_iters"])
    except RateBoundError as err:
        rows = err.rows
        failures.append(str(err))
        print(f"  assert error estimate holds on every row: FAILED ({err})")
    else:
        print("  assert error estimate holds on every row: ok")
    write_csv(
        [(r.delta, r.alpha, r.d_sym, r.bound) for r in rows],
        out / "rate.csv",
        header=["delta", "alpha", "d_sym", "bound"],
    )
    for r in rows:
        print(f"  delta={r.delta:9.3e} alpha={r.alpha:9.3e} "
              f"d_sym={r.d_sym:11.4e} bound={r.bound:11.4e}")
    if len(rows) >= 2:
        slope = np.polyfit(np.log([r.delta for r in rows]),
                           np.log([max(r.d_sym, 1e-300) for r in rows]), 1)[0]
        print(f"  log-log slope of d_sym vs delta: {slope:.3f}")
    return failures


# ---------------------------------------------------------------------------
# training (shared by the autoencoder commands)

def _train_or_load(cfg, conv):
    """Returns (encoder, decoder, mean image or None, images, source)."""
    n_eval = cfg.get("n_show", 5) + cfg.get("digits", 0)
    images, source = load_images(cfg["data"], cfg["n_train"] + n_eval, cfg["seed"])
    train, held_out = images[: cfg["n_train"]], images[cfg["n_train"] :]
    model_dir = cfg.get("model", "")
    if model_dir:
        mdir = Path(model_dir)
        enc_shape = (1, 28, 28) if conv else None
        encoder = read_network(mdir / "encoder.lbnn", input_shape=enc_shape)
        decoder = read_network(mdir / "decoder.lbnn")
        mean = None
        mean_path = mdir / "mean.lbtf"
        if mean_path.exists():
            mean = read_tensor(mean_path)
        print(f"loaded model from {mdir} ({source} evaluation images)")
        return encoder, decoder, mean, train, held_out, source
    tc = TrainConfig(learning_rate=cfg["lr"], epochs=cfg["epochs"],
                     batch_size=cfg["batch_size"], seed=cfg["seed"])
    log = []
    if conv:
        encoder, decoder, final_mse = train_conv_autoencoder(train, tc, log_sink=log)
        mean = None
    else:
        centred, mean = center_dataset(train.reshape(len(train), -1))
        encoder, decoder, final_mse = train_dense_autoencoder(
            centred, cfg["code_dim"], tc, log_sink=log
        )
    print(f"trained on {len(train)} {source} images for {cfg['epochs']} epochs: "
          f"mse {log[0][1]:.3f} -> {final_mse:.3f}")
    return encoder, decoder, mean, train, held_out, source


def run_train(cfg):
    out = _outdir(cfg)
    conv = cfg["arch"] == "conv"
    images, source = load_images(cfg["data"], cfg["n_train"], cfg["seed"])
    tc = TrainConfig(learning_rate=cfg["lr"], epochs=cfg["epochs"],
                     batch_size=cfg["batch_size"], seed=cfg["seed"])
    log = []
    if conv:
        encoder, decoder, final_mse = train_conv_autoencoder(images, tc, log_sink=log)
    else:
        centred, mean = center_dataset(images.reshape(len(images), -1))
        encoder, decoder, final_mse = train_dense_autoencoder(
            centred, cfg["code_dim"], tc, log_sink=log
        )
        write_tensor(out / "mean.lbtf", mean)
    write_network(out / "encoder.lbnn", encoder)
    write_network(out / "decoder.lbnn", decoder)
    write_csv(log, out / "training_log.csv", header=["epoch", "mse"])
    print(f"trained {cfg['arch']} autoencoder on {len(images)} {source} images; "
          f"final mse {final_mse:.4f}; artifacts in {out}")
    failures = []
    _check(failures, log[-1][1] <= log[0][1], "training reduced the epoch loss")
    return failures


# ---------------------------------------------------------------------------
# perceptron inversion on image codes

def _image_layer(encoder):
    """Dense encoder layer rebound to 28 x 28 image inputs (for TV)."""
    op = encoder.layers[0].op
    side = int(round(math.sqrt(op.weight.shape[1])))
    img_op = DenseAffine(op.weight, op.bias, input_shape=(side, side))
    return Layer(img_op, encoder.layers[0].penalty)


def run_mnist_perceptron(cfg):
    out = _outdir(cfg)
    encoder, decoder, mean, train, held_out, source = _train_or_load(cfg, conv=False)
    if mean is None:
        mean = np.zeros(28 * 28)
    layer = _image_layer(encoder)
    reg = TotalVariation()
    pdhg_cfg = PdhgConfig.for_layer(layer.op, cfg["alpha"], reg,
                                    max_iters=cfg["max_iters"], stop_tol=1e-6)
    mean_img = mean.reshape(28, 28)
    rows = []
    for i in range(cfg["n_show"]):
        img = train[i]
        centred = img.reshape(-1) - mean
        code = encoder.forward(centred)
        y_delta, delta_sq = add_noise(
            code, NoiseSpec(std=cfg["noise_std"], seed=cfg["seed"] + 100 + i,
                            clip_nonneg=True)
        )
        x_inv, rep = pdhg_invert_perceptron(
            layer, y_delta, reg, pdhg_cfg,
        )
        decoded = decoder.forward(y_delta).reshape(28, 28) + mean_img
        inverted = x_inv + mean_img
        write_pgm(_display(img), out / f"sample{i}-truth.pgm")
        write_pgm(_display(decoded), out / f"sample{i}-decoded.pgm")
        write_pgm(_display(inverted), out / f"sample{i}-inverted.pgm")
        rows.append((i, delta_sq, psnr(inverted, img), psnr(decoded, img)))
        print(f"  sample {i}: inverted {rows[-1][2]:.2f} dB, "
              f"decoded {rows[-1][3]:.2f} dB ({rep.iterations} iters)")
    write_csv(rows, out / "psnr.csv",
              header=["sample", "delta_sq", "psnr_inverted", "psnr_decoded"])
    return []


# ---------------------------------------------------------------------------
# CNN inversion via coordinate descent

def run_mnist_cnn(cfg):
    out = _outdir(cfg)
    encoder, decoder, _, train, held_out, source = _train_or_load(cfg, conv=True)
    reg = TotalVariation()
    rows = []
    for i in range(cfg["n_show"]):
        img = held_out[i] if len(held_out) > i else train[i]
        code = encoder.forward(img[None, :, :])
        y_delta, delta_sq = add_noise(
            code, NoiseSpec(std=cfg["noise_std"], seed=cfg["seed"] + 200 + i,
                            clip_nonneg=True)
        )
        x_inv, _, rep = coordinate_descent_invert(
            encoder, y_delta, reg, cfg["alpha"],
            outer_iters=cfg["outer_iters"], inner_iters=cfg["inner_iters"],
        )
        inverted = x_inv.reshape(28, 28)
        decoded = decoder.forward(y_delta).reshape(28, 28)
        write_pgm(_display(img), out / f"sample{i}-truth.pgm")
        write_pgm(_display(decoded), out / f"sample{i}-decoded.pgm")
        write_pgm(_display(inverted), out / f"sample{i}-inverted.pgm")
        rows.append((i, delta_sq, psnr(inverted, img), psnr(decoded, img)))
        print(f"  sample {i}: inverted {rows[-1][2]:.2f} dB, "
              f"decoded {rows[-1][3]:.2f} dB ({rep.iterations} sweeps)")
    write_csv(rows, out / "psnr.csv",
              header=["sample", "delta_sq", "psnr_inverted", "psnr_decoded"])
    return []


# ---------------------------------------------------------------------------
# noise sweep

def sweep_noise_levels(encoder, decoder, digits, stds, alphas, seed,
                       outer_iters=120, inner_iters=50, jobs=2):
    """PSNR of inversion vs decoding per noise level.

    Per level one regularisation weight is picked from the grid maximising
    the mean inversion PSNR over the digits.  Levels run concurrently
    (inputs are immutable); rows come back sorted by realised delta^2.
    """
    reg = TotalVariation()
    codes = [encoder.forward(d[None, :, :]) for d in digits]

    def eval_level(item):
        li, std = item
        noisy = []
        dsqs = []
        for j, code in enumerate(codes):
            y_d, dsq = add_noise(
                code, NoiseSpec(std=std, seed=seed + 1000 + 17 * li + j,
                                clip_nonneg=True)
            )
            noisy.append(y_d)
            dsqs.append(dsq)
        best_alpha, best_mean, best_per_digit = None, -np.inf, None
        for a in alphas:
            vals = []
            for j, y_d in enumerate(noisy):
                x_inv, _, _ = coordinate_descent_invert(
                    encoder, y_d, reg, a, outer_iters=outer_iters,
                    inner_iters=inner_iters,
                )
                vals.append(psnr(x_inv.reshape(28, 28), digits[j]))
            mean_val = float(np.mean(vals))
            if mean_val > best_mean:
                best_alpha, best_mean, best_per_digit = float(a), mean_val, vals
        dec_vals = [
            psnr(decoder.forward(y_d).reshape(28, 28), digits[j])
            for j, y_d in enumerate(noisy)
        ]
        return {
            "std": std,
            "delta_sq": float(np.mean(dsqs)),
            "best_alpha": best_alpha,
            "psnr_inverted": best_mean,
            "psnr_decoded": float(np.mean(dec_vals)),
            "per_digit_inverted": best_per_digit,
            "per_digit_decoded": dec_vals,
        }

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        rows = list(pool.map(eval_level, enumerate(stds)))
    rows.sort(key=lambda r: r["delta_sq"])
    return rows


def run_noise_sweep(cfg):
    out = _outdir(cfg)
    encoder, decoder, _, train, held_out, source = _train_or_load(cfg, conv=True)
    digits = [held_out[i] if len(held_out) > i else train[i]
              for i in range(cfg["digits"])]
    stds = np.linspace(0.0, cfg["std_max"], cfg["levels"])
    alphas = parse_grid(cfg["alpha_grid"])
    rows = sweep_noise_levels(
        encoder, decoder, digits, stds, alphas, cfg["seed"],
        outer_iters=cfg["outer_iters"], inner_iters=cfg["inner_iters"],
        jobs=cfg["jobs"],
    )
    write_csv(
        [(r["delta_sq"], r["best_alpha"], r["psnr_inverted"], r["psnr_decoded"])
         for r in rows],
        out / "sweep.csv",
        header=["delta_sq", "best_alpha", "psnr_inverted", "psnr_decoded"],
    )
    for r in rows:
        print(f"  delta^2={r['delta_sq']:8.3f} alpha={r['best_alpha']:9.2e} "
              f"inverted {r['psnr_inverted']:6.2f} dB  "
              f"decoded {r['psnr_decoded']:6.2f} dB")
    failures = []
    slack = 0.5
    monotone = all(
        rows[j + 1]["psnr_inverted"] <= rows[j]["psnr_inverted"] + slack
        for j in range(len(rows) - 1)
    )
    _check(failures, monotone,
           "inversion PSNR non-increasing in delta^2 (0.5 dB slack)")
    return failures


COMMANDS = {
    "circle": run_circle,
    "rate": run_rate,
    "mnist-perceptron": run_mnist_perceptron,
    "mnist-cnn": run_mnist_cnn,
    "noise-sweep": run_noise_sweep,
    "train": run_train,
}
