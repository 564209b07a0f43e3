"""Command-line interface.

Subcommands:
    train     fit a model on an IDX image/label pair and save it
    eval      accuracy + confusion matrix of a saved model on a dataset
    bench     measure software inference latency/throughput for a saved model
    simulate  run the accelerator simulator and cross-check the software path
    sweep     simulate one sample image across a grid of hardware shapes
    selftest  run the synthetic diagnostic suites

Every subcommand accepts `--config FILE` where FILE holds `key=value` lines
(`#` comments allowed); keys name long flags with `-` or `_`. Values from the
file are defaults only: flags given on the command line win.

Metric records are JSON objects, one per line. Eval records carry no
timestamps or timings, so repeated runs produce identical files; train and
bench records include wall-clock fields by design. Human-readable progress
goes to stdout only. CSV schemas are pinned by tests and documented in the
README.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, accel, encoding, learning, scoring, selftest
from .datasets import load_image_set, normalize_images, pad_images, read_idx_images
from .hv import generate_banks
from .modelio import ModelParams, load_model, save_model


def _parse_pair(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected H,W, got {text!r}")
    return int(parts[0]), int(parts[1])


def _parse_int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p]


def _append_jsonl(path: str | None, record: dict) -> None:
    line = json.dumps(record, sort_keys=True)
    if path:
        with open(path, "a") as f:
            f.write(line + "\n")
    else:
        print(line)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def _read_config_tokens(path: str) -> list[str]:
    """Turn key=value lines into long-option tokens."""
    tokens: list[str] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {raw!r} is not key=value")
        key, value = line.split("=", 1)
        flag = "--" + key.strip().lstrip("-").replace("_", "-")
        tokens.extend([flag, value.strip()])
    return tokens


def _expand_config(argv: list[str]) -> list[str]:
    """Splice --config file tokens in right after the subcommand.

    File tokens come before every explicit flag, so argparse's last-wins
    rule makes command-line flags override the file.
    """
    if not argv or argv[0].startswith("-"):
        return list(argv)
    path = None
    rest: list[str] = []
    i = 1
    while i < len(argv):
        tok = argv[i]
        if tok == "--config":
            if i + 1 >= len(argv):
                raise ValueError("--config requires a file path")
            path = argv[i + 1]
            i += 2
            continue
        if tok.startswith("--config="):
            path = tok.split("=", 1)[1]
            i += 1
            continue
        rest.append(tok)
        i += 1
    if path is None:
        return list(argv)
    return [argv[0], *_read_config_tokens(path), *rest]


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--images", required=True, help="IDX image file (gzip ok)")
    p.add_argument("--labels", required=True, help="IDX label file (gzip ok)")
    p.add_argument("--limit", type=int, default=None, help="use only the first N samples")
    p.add_argument(
        "--pad-to", type=_parse_pair, default=(32, 32), metavar="H,W",
        help="zero-pad images to this grid (default 32,32)",
    )


def _add_model_hyper_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=10000, help="hypervector dimensionality")
    p.add_argument("--patch", type=int, default=3, help="patch side length")
    p.add_argument("--stride", type=int, default=3, help="patch stride")
    p.add_argument("--levels", type=int, default=256, help="intensity levels")
    p.add_argument("--lr", type=float, default=0.035, help="retraining learning rate")
    p.add_argument("--epochs", type=int, default=5, help="retraining epochs")
    p.add_argument("--seed", type=int, default=0, help="codebook seed")
    p.add_argument("--shuffle-seed", type=int, default=0, help="epoch shuffle seed")


def _add_accel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pd", type=int, default=accel.DEFAULT_P_D, help="dimension lanes")
    p.add_argument(
        "--ppatch", type=int, default=accel.DEFAULT_P_PATCH, help="patch processors"
    )
    p.add_argument(
        "--clock-mhz", type=float, default=accel.DEFAULT_CLOCK_MHZ, help="clock in MHz"
    )


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--config", metavar="FILE", default=None,
        help="key=value defaults file; explicit flags override it",
    )


def _load_for_model(params, images_path, labels_path, pad_to, limit):
    images, labels = load_image_set(images_path, labels_path, pad_to=pad_to, limit=limit)
    if images.shape[1:] != (params.h_pad, params.w_pad):
        raise ValueError(
            f"padded grid {images.shape[1:]} does not match model grid "
            f"{(params.h_pad, params.w_pad)}; adjust --pad-to"
        )
    return images, labels


def cmd_train(args) -> int:
    t0 = time.perf_counter()
    images, raw_labels = load_image_set(
        args.images, args.labels, pad_to=args.pad_to, limit=args.limit
    )
    classes, labels = np.unique(raw_labels, return_inverse=True)
    load_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    h_pad, w_pad = images.shape[1:]
    banks = generate_banks(args.dim, (h_pad, w_pad), args.levels, args.seed)
    lvl = encoding.quantize_image(images, levels=args.levels)
    words = encoding.encode_images(
        lvl, banks, args.patch, args.stride, workers=args.workers
    )
    encode_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    protos, history = learning.train_prototypes(
        words, labels, num_classes=len(classes), dim=args.dim,
        lr=args.lr, epochs=args.epochs, shuffle_seed=args.shuffle_seed,
    )
    train_s = time.perf_counter() - t0
    train_acc, _ = scoring.evaluate(words, labels, protos)

    t0 = time.perf_counter()
    params = ModelParams(
        dim=args.dim, levels=args.levels, h_pad=h_pad, w_pad=w_pad,
        patch=args.patch, stride=args.stride, num_classes=len(classes),
        bank_seed=args.seed,
    )
    save_model(args.model, params, protos)
    save_s = time.perf_counter() - t0

    n = images.shape[0]
    record = {
        "cmd": "train",
        "n_train": n,
        "dim": args.dim,
        "patch": args.patch,
        "stride": args.stride,
        "levels": args.levels,
        "lr": args.lr,
        "epochs": args.epochs,
        "seed": args.seed,
        "shuffle_seed": args.shuffle_seed,
        "mistakes_per_epoch": history,
        "train_accuracy": round(train_acc, 6),
        "load_s": round(load_s, 3),
        "encode_s": round(encode_s, 3),
        "train_s": round(train_s, 3),
        "save_s": round(save_s, 3),
        "model": str(args.model),
    }
    _append_jsonl(args.out, record)
    if args.csv:
        _write_csv(
            args.csv,
            ["model", "n_train", "dim", "patch", "stride", "levels", "lr",
             "epochs", "seed", "shuffle_seed", "train_accuracy",
             "mistakes_per_epoch", "load_s", "encode_s", "train_s", "save_s"],
            [[str(args.model), n, args.dim, args.patch, args.stride,
              args.levels, args.lr, args.epochs, args.seed, args.shuffle_seed,
              f"{train_acc:.6f}", ";".join(str(m) for m in history),
              f"{load_s:.3f}", f"{encode_s:.3f}", f"{train_s:.3f}",
              f"{save_s:.3f}"]],
        )
    total = load_s + encode_s + train_s + save_s
    print(
        f"trained on {n} images in {total:.1f}s "
        f"(load {load_s:.1f} encode {encode_s:.1f} train {train_s:.1f} "
        f"save {save_s:.1f}) | train acc {train_acc:.4f} -> {args.model}"
    )
    return 0


def cmd_eval(args) -> int:
    params, protos = load_model(args.model)
    images, labels = _load_for_model(
        params, args.images, args.labels, args.pad_to, args.limit
    )
    banks = generate_banks(
        params.dim, (params.h_pad, params.w_pad), params.levels, params.bank_seed
    )
    start = time.perf_counter()
    lvl = encoding.quantize_image(images, levels=params.levels)
    accuracy, confusion = scoring.evaluate_images(
        lvl, labels, banks, params.patch, params.stride, protos,
        workers=args.workers,
    )
    seconds = time.perf_counter() - start

    n = images.shape[0]
    record = {
        "cmd": "eval",
        "n_test": n,
        "accuracy": round(accuracy, 6),
        "dim": params.dim,
        "patch": params.patch,
        "stride": params.stride,
        "model": str(args.model),
    }
    _append_jsonl(args.out, record)
    if args.csv:
        c = params.num_classes
        _write_csv(
            args.csv,
            ["true_label"] + [f"pred_{j}" for j in range(c)],
            [[i] + confusion[i].tolist() for i in range(c)],
        )
    print(f"accuracy {accuracy:.4f} on {n} images ({seconds:.1f}s)")
    return 0


def cmd_bench(args) -> int:
    params, protos = load_model(args.model)
    images, labels = _load_for_model(
        params, args.images, args.labels, args.pad_to, args.limit
    )
    banks = generate_banks(
        params.dim, (params.h_pad, params.w_pad), params.levels, params.bank_seed
    )
    proto_words = protos.require_packed()
    lvl = encoding.quantize_image(images, levels=params.levels)
    n = images.shape[0]

    # single-image path: encode and score timed separately per iteration
    for k in range(args.warmup):
        hv = encoding.encode_image(lvl[k % n], banks, params.patch, params.stride)
        scoring.raw_scores(hv.words, proto_words, params.dim)
    enc_t = np.empty(args.samples)
    sco_t = np.empty(args.samples)
    for k in range(args.samples):
        img = lvl[k % n]
        t0 = time.perf_counter()
        hv = encoding.encode_image(img, banks, params.patch, params.stride)
        t1 = time.perf_counter()
        raw = scoring.raw_scores(hv.words, proto_words, params.dim)
        int(scoring.predict_from_raw(raw))
        t2 = time.perf_counter()
        enc_t[k] = t1 - t0
        sco_t[k] = t2 - t1
    total_t = enc_t + sco_t
    median_ms = float(np.median(total_t)) * 1e3
    p99_ms = float(np.percentile(total_t, 99)) * 1e3
    mean_encode_ms = float(np.mean(enc_t)) * 1e3
    mean_score_ms = float(np.mean(sco_t)) * 1e3
    mean_total_ms = float(np.mean(total_t)) * 1e3

    # batch path: one walk over the whole dataset
    t0 = time.perf_counter()
    words = encoding.encode_images(
        lvl, banks, params.patch, params.stride, workers=args.workers
    )
    raw = scoring.raw_scores_batch(words, proto_words, params.dim)
    scoring.predict_from_raw(raw)
    batch_s = time.perf_counter() - t0
    batch_thr = n / batch_s

    k_h, k_w = encoding.patch_grid(
        params.h_pad, params.w_pad, params.patch, params.stride
    )
    cfg = accel.AccelConfig(p_d=args.pd, p_patch=args.ppatch, clock_mhz=args.clock_mhz)
    cyc = accel.closed_form_cycles(
        params.dim, k_h * k_w, params.patch, params.num_classes, cfg
    )
    accel_lat_ms = accel.latency_us(cyc.total, cfg.clock_mhz) / 1e3
    accel_thr = accel.throughput_img_per_s(cyc.total, cfg.clock_mhz)

    record = {
        "cmd": "bench",
        "n_images": n,
        "samples": args.samples,
        "warmup": args.warmup,
        "latency_ms_median": round(median_ms, 4),
        "latency_ms_p99": round(p99_ms, 4),
        "encode_ms_mean": round(mean_encode_ms, 4),
        "score_ms_mean": round(mean_score_ms, 4),
        "total_ms_mean": round(mean_total_ms, 4),
        "batch_throughput_img_s": round(batch_thr, 1),
        "workers": args.workers,
        "accel_p_d": cfg.p_d,
        "accel_p_patch": cfg.p_patch,
        "accel_clock_mhz": cfg.clock_mhz,
        "accel_cycles": cyc.total,
        "accel_latency_ms": round(accel_lat_ms, 6),
        "accel_throughput_img_s": round(accel_thr, 1),
        "model": str(args.model),
    }
    _append_jsonl(args.out, record)
    if args.csv:
        _write_csv(
            args.csv,
            ["platform", "latency_ms", "latency_p99_ms", "throughput_img_s", "notes"],
            [
                ["software", f"{median_ms:.4f}", f"{p99_ms:.4f}",
                 f"{batch_thr:.1f}",
                 f"encode {mean_encode_ms:.4f} ms + score {mean_score_ms:.4f} ms "
                 f"mean per image; batch of {n} with {args.workers} worker(s)"],
                ["accel-model", f"{accel_lat_ms:.6f}", f"{accel_lat_ms:.6f}",
                 f"{accel_thr:.1f}",
                 f"cycle model at {cfg.clock_mhz:g} MHz, P_D={cfg.p_d}, "
                 f"P_patch={cfg.p_patch}; host transfers not modeled "
                 "(end-to-end hardware with transfers reports ~0.09 ms)"],
            ],
        )
    print(
        f"software {median_ms:.3f} ms median, {p99_ms:.3f} ms p99 "
        f"({args.samples} samples) | batch {batch_thr:.0f} img/s | "
        f"accel model {accel_lat_ms * 1e3:.2f} us, {accel_thr:.0f} img/s"
    )
    return 0


def cmd_simulate(args) -> int:
    params, protos = load_model(args.model)
    banks = generate_banks(
        params.dim, (params.h_pad, params.w_pad), params.levels, params.bank_seed
    )
    images, labels = load_image_set(
        args.images, args.labels, pad_to=(params.h_pad, params.w_pad), limit=args.limit
    )
    lvl = encoding.quantize_image(images, levels=params.levels)
    cfg = accel.AccelConfig(p_d=args.pd, p_patch=args.ppatch, clock_mhz=args.clock_mhz)
    proto_words = protos.require_packed()

    start = time.perf_counter()
    sim_labels, sim_raw, sim_words = accel.simulate_images(
        lvl, banks, params.patch, params.stride, proto_words, cfg,
        workers=args.workers,
    )
    sim_seconds = time.perf_counter() - start

    sw_words = encoding.encode_images(
        lvl, banks, params.patch, params.stride, workers=args.workers
    )
    sw_raw = scoring.raw_scores_batch(sw_words, proto_words, params.dim)
    sw_labels = scoring.predict_from_raw(sw_raw)

    hv_ok = ~np.any(sim_words != sw_words, axis=1)
    score_ok = ~np.any(sim_raw != sw_raw, axis=1)
    hv_mismatch = int(np.sum(~hv_ok))
    score_mismatch = int(np.sum(~score_ok))
    label_mismatch = int(np.sum(sim_labels != sw_labels))
    accuracy = float(np.mean(sim_labels == labels))

    k_h, k_w = encoding.patch_grid(
        params.h_pad, params.w_pad, params.patch, params.stride
    )
    cyc = accel.closed_form_cycles(
        params.dim, k_h * k_w, params.patch, params.num_classes, cfg
    )
    record = {
        "cmd": "simulate",
        "n": images.shape[0],
        "p_d": cfg.p_d,
        "p_patch": cfg.p_patch,
        "clock_mhz": cfg.clock_mhz,
        "hv_mismatches": hv_mismatch,
        "score_mismatches": score_mismatch,
        "label_mismatches": label_mismatch,
        "accuracy": round(accuracy, 6),
        "cycles_total": cyc.total,
        "latency_us": round(accel.latency_us(cyc.total, cfg.clock_mhz), 4),
        "throughput_img_s": round(
            accel.throughput_img_per_s(cyc.total, cfg.clock_mhz), 1
        ),
        "model": str(args.model),
    }
    _append_jsonl(args.out, record)
    if args.csv:
        _write_csv(
            args.csv,
            ["index", "true_label", "software_label", "simulated_label",
             "scores_match", "hv_match"],
            [[i, int(labels[i]), int(sw_labels[i]), int(sim_labels[i]),
              int(score_ok[i]), int(hv_ok[i])] for i in range(images.shape[0])],
        )
    print(
        f"simulated {images.shape[0]} imgs in {sim_seconds:.1f}s | "
        f"acc {accuracy:.4f} | mismatches hv={hv_mismatch} "
        f"score={score_mismatch} label={label_mismatch}"
    )
    if hv_mismatch or score_mismatch or label_mismatch:
        print(
            "fatal: simulator disagrees with the software route "
            "(simulator bug)", file=sys.stderr,
        )
        return 1
    return 0


def cmd_sweep(args) -> int:
    params, protos = load_model(args.model)
    banks = generate_banks(
        params.dim, (params.h_pad, params.w_pad), params.levels, params.bank_seed
    )
    raw_images = read_idx_images(args.images)
    if not 0 <= args.sample_index < raw_images.shape[0]:
        raise ValueError(
            f"--sample-index {args.sample_index} out of range "
            f"for {raw_images.shape[0]} images"
        )
    sample = raw_images[args.sample_index : args.sample_index + 1]
    sample = normalize_images(pad_images(sample, (params.h_pad, params.w_pad)))
    lvl = encoding.quantize_image(sample[0], levels=params.levels)

    configs = [
        accel.AccelConfig(p_d=p_d, p_patch=p_patch, clock_mhz=args.clock_mhz)
        for p_d in args.pd
        for p_patch in args.ppatch
    ]
    proto_words = protos.require_packed()
    reports = accel.sweep(
        configs, lvl, banks, params.patch, params.stride, proto_words
    )

    sw_hv = encoding.encode_image(lvl, banks, params.patch, params.stride)
    sw_raw = scoring.raw_scores(sw_hv.words, proto_words, params.dim)
    sw_label = int(scoring.predict_from_raw(sw_raw))
    for cfg, rep in zip(configs, reports):
        if (
            not np.array_equal(rep.hv_words, sw_hv.words)
            or not np.array_equal(rep.raw_scores, sw_raw)
            or rep.predicted_label != sw_label
        ):
            print(
                f"fatal: simulator disagrees with the software route at "
                f"P_D={cfg.p_d}, P_patch={cfg.p_patch} (simulator bug)",
                file=sys.stderr,
            )
            return 1

    k_h, k_w = encoding.patch_grid(
        params.h_pad, params.w_pad, params.patch, params.stride
    )
    num_patches = k_h * k_w
    rows = [
        [cfg.p_d, cfg.p_patch, params.dim, params.patch, num_patches,
         rep.cycles.segments, rep.cycles.groups, rep.cycles.total,
         f"{rep.latency_us:.4f}", f"{rep.throughput_img_per_s:.1f}",
         rep.predicted_label]
        for cfg, rep in zip(configs, reports)
    ]
    _write_csv(
        args.out,
        ["P_D", "P_patch", "D", "M", "T", "segments", "groups",
         "cycles_total", "latency_us", "throughput_img_s", "label"],
        rows,
    )
    print(
        f"swept {len(rows)} configs on sample {args.sample_index} "
        f"(label {sw_label}) -> {args.out}"
    )
    return 0


def cmd_selftest(args) -> int:
    pairs = 200 if args.fast else 1000
    trials = 50 if args.fast else 200
    results = selftest.run_all(pairs=pairs, trials=trials)
    failed = 0
    for r in results:
        tag = "ok  " if r.passed else "FAIL"
        print(f"{tag} {r.name:<24} {r.seconds:6.2f}s  {r.detail}")
        failed += not r.passed
    total = sum(r.seconds for r in results)
    print(f"{len(results) - failed}/{len(results)} suites passed in {total:.1f}s")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdc",
        description="patch-based hyperdimensional image classifier and "
        "accelerator simulator",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit and save a model")
    _add_data_args(p)
    _add_model_hyper_args(p)
    _add_common_args(p)
    p.add_argument("--model", required=True, help="output model path")
    p.add_argument("--out", default=None, help="append a JSONL metrics record here")
    p.add_argument("--csv", default=None, help="write a one-row CSV summary here")
    p.add_argument("--workers", type=int, default=1, help="encoding processes")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model")
    _add_data_args(p)
    _add_common_args(p)
    p.add_argument("--model", required=True, help="model path")
    p.add_argument("--out", default=None, help="append a JSONL metrics record here")
    p.add_argument("--csv", default=None, help="write the confusion matrix CSV here")
    p.add_argument("--workers", type=int, default=1, help="encoding processes")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("bench", help="measure software latency and throughput")
    _add_data_args(p)
    _add_accel_args(p)
    _add_common_args(p)
    p.add_argument("--model", required=True, help="model path")
    p.add_argument(
        "--samples", type=int, default=1000,
        help="single-image latency measurements (default 1000)",
    )
    p.add_argument(
        "--warmup", type=int, default=50, help="untimed warmup iterations"
    )
    p.add_argument("--out", default=None, help="append a JSONL metrics record here")
    p.add_argument("--csv", default=None, help="write the latency table CSV here")
    p.add_argument("--workers", type=int, default=1, help="batch encoding processes")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("simulate", help="run the accelerator simulator")
    _add_data_args(p)
    _add_accel_args(p)
    _add_common_args(p)
    p.add_argument("--model", required=True, help="model path")
    p.add_argument("--out", default=None, help="append a JSONL metrics record here")
    p.add_argument("--csv", default=None, help="write per-image agreement CSV here")
    p.add_argument("--workers", type=int, default=1, help="simulation processes")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="cycle model grid over hardware shapes")
    _add_common_args(p)
    p.add_argument("--model", required=True, help="model path")
    p.add_argument("--images", required=True, help="IDX image file for the sample")
    p.add_argument(
        "--sample-index", type=int, default=0, help="which image to simulate"
    )
    p.add_argument(
        "--pd", type=_parse_int_list, default=[64, 128, 256, 512],
        help="comma-separated dimension lane counts",
    )
    p.add_argument(
        "--ppatch", type=_parse_int_list, default=[4, 8, 16, 32],
        help="comma-separated patch processor counts",
    )
    p.add_argument("--clock-mhz", type=float, default=accel.DEFAULT_CLOCK_MHZ)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("selftest", help="run the synthetic diagnostic suites")
    _add_common_args(p)
    p.add_argument("--fast", action="store_true", help="reduced trial counts")
    p.set_defaults(fn=cmd_selftest)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        argv = _expand_config(argv)
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
