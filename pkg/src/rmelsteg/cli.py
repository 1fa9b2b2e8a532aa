"""Command-line front end.

Exit codes: 0 success, 2 validation error, 3 I/O error. Errors are written to
stderr as one JSON object per line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .audio_io import AudioClip, atomic_write_bytes, downmix_mono, read_wav, write_wav
from .corpus import (
    CorpusManifest,
    features_to_csv,
    generate_corpus,
    list_wavs,
    load_grid,
    read_features_csv,
)
from .dsp import ScaleKind, SpectrumMode, psd_welch
from .embedders import EmbedderSpec, embed
from .errors import StegError, ValidationError
from .features import EXTRACTORS, CalibMode, CalibrationSpec, FeatureConfig, extract
from .ml import Dataset, GaConfig, Kernel, SvmModel, anova_f, ga_select, kfold_cv, svm_predict, svm_train
from .steg_analysis import noise_pmf, sensitivity_report, steg_noise
from .synth import synth_corpus

logger = logging.getLogger("rmelsteg")

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 2, 3


@dataclass
class RunConfig:
    M: int = 29
    frame_len: int = 1024
    hop: int = 512
    scale: str = ScaleKind.RMEL.value
    spectrum: str = SpectrumMode.POWER.value
    double_log: bool = False
    extractor: str = "proposed"
    calibration: str = CalibMode.UNIVERSAL.value
    reembedder: dict | None = None
    calib_seed: int | None = None
    kernel: str = "rbf"
    C: float = 10.0
    gamma: float | None = None
    k: int = 10
    grouped: bool = True
    seed: int = 0
    jobs: int = 1

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(self.M, self.frame_len, self.hop, ScaleKind(self.scale),
                             SpectrumMode(self.spectrum), self.double_log)

    def calibration_spec(self) -> CalibrationSpec:
        if CalibMode(self.calibration) is CalibMode.UNIVERSAL:
            return CalibrationSpec.universal(self.calib_seed)
        if self.reembedder is None:
            raise ValidationError("targeted calibration needs --reembedder")
        return CalibrationSpec.targeted(EmbedderSpec.from_dict(self.reembedder), self.calib_seed)

    def kernel_obj(self) -> Kernel:
        return Kernel(self.kernel, self.gamma if self.kernel == "rbf" else None)


CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the --config JSON file, then explicit flags."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg = replace(cfg, **data)
    overrides = {k: v for k, v in vars(args).items() if k in CONFIG_KEYS and v is not None}
    if isinstance(overrides.get("reembedder"), str):
        overrides["reembedder"] = json.loads(overrides["reembedder"])
    cfg = replace(cfg, **overrides)
    ScaleKind(cfg.scale), SpectrumMode(cfg.spectrum), CalibMode(cfg.calibration)
    if cfg.extractor not in EXTRACTORS:
        raise ValidationError(f"unknown extractor {cfg.extractor!r}")
    return cfg


def _write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode())


def _emit(text: str, out: str | None) -> None:
    if out:
        _write_text(out, text)
    else:
        sys.stdout.write(text)


# -- feature extraction worker (module level so it pickles) --------------------

def _extract_one(task):
    path, name, calib, fcfg = task
    clip = downmix_mono(read_wav(path))
    return extract(name, clip, calib, fcfg).values


def extract_manifest(manifest: CorpusManifest, cfg: RunConfig, only: str | None = None) -> Dataset:
    rows = [r for r in manifest.rows
            if r.role == "COVER" or only is None or re.search(only, r.clip_id)]
    calib = cfg.calibration_spec() if cfg.extractor == "proposed" else None
    fcfg = cfg.feature_config()
    tasks = [(manifest.resolve(r), cfg.extractor, calib, fcfg) for r in rows]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            values = list(pool.map(_extract_one, tasks, chunksize=4))
    else:
        values = [_extract_one(t) for t in tasks]
    return Dataset(np.array(values), np.array([r.label for r in rows]), [r.clip_id for r in rows])


def top_features(ds: Dataset, n: int = 3) -> np.ndarray:
    """Indices of the ``n`` columns with the largest cover-vs-stego F-score."""
    F, _ = anova_f(ds.X[ds.y == 0], ds.X[ds.y == 1])
    F = np.nan_to_num(np.atleast_1d(F), nan=0.0, posinf=np.finfo(float).max)
    return np.argsort(-F, kind="stable")[:n]


# -- commands -------------------------------------------------------------------

def cmd_gen_synthetic(args, cfg: RunConfig) -> int:
    out = Path(args.out)
    for i, clip in enumerate(synth_corpus(args.n, cfg.seed, args.duration, args.rate)):
        write_wav(clip, out / f"cover_{i:04d}.wav")
    print(json.dumps({"written": args.n, "dir": str(out)}))
    return EXIT_OK


def cmd_gen_corpus(args, cfg: RunConfig) -> int:
    grid = load_grid(Path(args.grid).read_text()) if args.grid else []
    manifest, failures = generate_corpus(args.cover_dir, grid, args.out, cfg.seed)
    manifest.write(Path(args.out) / "manifest.csv")
    n_cover = len(manifest.covers())
    print(json.dumps({"covers": n_cover, "stegos": len(manifest) - n_cover, "failures": failures}))
    if len(manifest) == 0:
        return EXIT_VALIDATION
    return EXIT_OK


def _load_covers(args) -> list[AudioClip]:
    if args.manifest:
        m = CorpusManifest.read(args.manifest)
        return [m.load(r) for r in m.covers()]
    if args.cover_dir:
        return [downmix_mono(read_wav(p)) for p in list_wavs(args.cover_dir)]
    raise ValidationError("give --manifest or --cover-dir")


def cmd_sense(args, cfg: RunConfig) -> int:
    spec = EmbedderSpec.from_json(args.embedder)
    spec = spec.with_seed(cfg.seed if args.seed is not None else spec.seed)
    report = sensitivity_report(_load_covers(args), spec, range(1, args.planes + 1))
    if args.out:
        _write_text(f"{args.out}.json", report.to_json())
        _write_text(f"{args.out}.csv", report.to_csv())
    sys.stdout.write(report.to_csv())
    return EXIT_OK


def cmd_features(args, cfg: RunConfig) -> int:
    manifest = CorpusManifest.read(args.manifest)
    ds = extract_manifest(manifest, cfg, args.only)
    _write_text(args.out, features_to_csv(ds))
    _write_text(f"{args.out}.json", json.dumps({"run_config": asdict(cfg)}, indent=2, sort_keys=True) + "\n")
    if args.top3:
        idx = top_features(ds, 3)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["clip_id", "label"] + [f"f{i + 1:03d}" for i in idx])
        for cid, lab, row in zip(ds.ids, ds.y, ds.X[:, idx]):
            w.writerow([cid, int(lab)] + [repr(float(v)) for v in row])
        _write_text(args.top3, buf.getvalue())
    print(json.dumps({"rows": len(ds), "features": int(ds.X.shape[1]), "out": args.out}))
    return EXIT_OK


def _sidecar(features_path) -> dict | None:
    p = Path(f"{features_path}.json")
    return json.loads(p.read_text())["run_config"] if p.exists() else None


def _read_mask(path) -> np.ndarray | None:
    if not path:
        return None
    return np.asarray(json.loads(Path(path).read_text())["mask"], dtype=bool)


def cmd_train(args, cfg: RunConfig) -> int:
    ds = read_features_csv(args.features)
    model = svm_train(ds.X, ds.y, cfg.kernel_obj(), cfg.C, seed=cfg.seed, feature_mask=_read_mask(args.mask))
    doc = model.to_dict()
    doc["extractor"] = _sidecar(args.features)
    _write_text(args.out, json.dumps(doc, sort_keys=True) + "\n")
    print(json.dumps({"support_vectors": int(model.alphas.size), "iterations": model.iterations}))
    return EXIT_OK


def _ga_config(args, cfg: RunConfig) -> GaConfig:
    return GaConfig(population=args.population, generations=args.generations,
                    mutation_rate=args.mutation_rate, elitism=args.elitism, seed=cfg.seed)


def cmd_cv(args, cfg: RunConfig) -> int:
    ds = read_features_csv(args.features)
    select, mask = None, _read_mask(args.mask)
    if args.ga:
        gcfg = _ga_config(args, cfg)
        if args.ga_scope == "global":
            mask = ga_select(ds, gcfg, cfg.kernel_obj(), cfg.C, cfg.grouped).mask
        else:
            def select(train):
                return ga_select(train, gcfg, cfg.kernel_obj(), cfg.C, cfg.grouped).mask
    report = kfold_cv(ds, cfg.k, cfg.kernel_obj(), cfg.C, cfg.seed, cfg.grouped, select, mask)
    if args.out:
        _write_text(f"{args.out}.json", report.to_json())
        _write_text(f"{args.out}.csv", report.to_csv())
    print(report.table_row())
    return EXIT_OK


def cmd_ga(args, cfg: RunConfig) -> int:
    ds = read_features_csv(args.features)
    res = ga_select(ds, _ga_config(args, cfg), cfg.kernel_obj(), cfg.C, cfg.grouped)
    doc = {"mask": res.mask.astype(int).tolist(), "fitness": res.fitness, "trace": res.trace,
           "selected": [f"f{i + 1:03d}" for i in np.flatnonzero(res.mask)]}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_scan(args, cfg: RunConfig) -> int:
    doc = json.loads(Path(args.model).read_text())
    model = SvmModel.from_dict(doc)
    run = RunConfig(**doc["extractor"]) if doc.get("extractor") else cfg
    fcfg = run.feature_config()
    calib = run.calibration_spec() if run.extractor == "proposed" else None
    expected = 4 * fcfg.M
    if model.n_features != expected:
        raise ValidationError(f"model expects {model.n_features} features, extractor yields {expected}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["path", "verdict", "margin"])
    for path in args.wavs:
        clip = downmix_mono(read_wav(path))
        label, margin = svm_predict(model, extract(run.extractor, clip, calib, fcfg).values)
        w.writerow([path, "STEGO" if label[0] else "COVER", f"{margin[0]:.6f}"])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_noise_pmf(args, cfg: RunConfig) -> int:
    cover = downmix_mono(read_wav(args.cover))
    if args.stego:
        stego = downmix_mono(read_wav(args.stego))
    elif args.embedder:
        spec = EmbedderSpec.from_json(args.embedder)
        stego = embed(cover, spec.with_seed(cfg.seed if args.seed is not None else spec.seed))
    else:
        raise ValidationError("give --stego or --embedder")
    pmf = noise_pmf(steg_noise(cover, stego))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["noise", "prob"])
    for v, p in zip(pmf.support, pmf.probs):
        w.writerow([int(v), repr(float(p))])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_psd(args, cfg: RunConfig) -> int:
    clip = downmix_mono(read_wav(args.wav))
    x = clip.samples.astype(float)
    if args.minus:
        x = steg_noise(downmix_mono(read_wav(args.minus)), clip).astype(float)
    ps = psd_welch(x, args.seg_len, args.hop_len, clip.sample_rate)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_hz", "psd"])
    for f, p in zip(ps.freqs, ps.bins):
        w.writerow([f"{f:.3f}", repr(float(p))])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--config", help="JSON file with RunConfig values; flags override it")
    p.add_argument("--print-config", action="store_true", help="dump the resolved RunConfig and exit")


def _feature_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--M", type=int, default=None, help="filter count (default 29)")
    p.add_argument("--frame-len", dest="frame_len", type=int, default=None)
    p.add_argument("--hop", type=int, default=None)
    p.add_argument("--scale", choices=[s.value for s in ScaleKind], default=None)
    p.add_argument("--spectrum", choices=[s.value for s in SpectrumMode], default=None)
    p.add_argument("--double-log", dest="double_log", action="store_const", const=True, default=None)
    p.add_argument("--extractor", choices=EXTRACTORS, default=None)
    p.add_argument("--calibration", choices=[m.value for m in CalibMode], default=None)
    p.add_argument("--reembedder", help="embedder JSON for targeted calibration")
    p.add_argument("--calib-seed", dest="calib_seed", type=int, default=None)


def _svm_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", choices=["rbf", "linear"], default=None)
    p.add_argument("--C", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)


def _ga_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--population", type=int, default=200)
    p.add_argument("--generations", type=int, default=50)
    p.add_argument("--mutation-rate", dest="mutation_rate", type=float, default=0.01)
    p.add_argument("--elitism", type=int, default=2)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rmelsteg", description="Calibrated R-Mel audio steganalysis workbench")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="write seeded band-limited cover WAVs")
    _common(p)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--duration", type=float, default=5.0)
    p.add_argument("--rate", type=int, default=44100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("gen-corpus", help="embed covers with a grid of embedders")
    _common(p)
    p.add_argument("cover_dir")
    p.add_argument("--grid", help="JSON file: list of embedder specs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("sense", help="bit-plane sensitivity report")
    _common(p)
    p.add_argument("--manifest")
    p.add_argument("--cover-dir", dest="cover_dir")
    p.add_argument("--embedder", required=True, help='e.g. {"kind":"lsb_match","capacity_bps":0.5}')
    p.add_argument("--planes", type=int, default=6)
    p.add_argument("--out", help="path prefix for .json and .csv outputs")
    p.set_defaults(func=cmd_sense)

    p = sub.add_parser("features", help="extract a feature matrix for a manifest")
    _common(p)
    _feature_flags(p)
    p.add_argument("manifest")
    p.add_argument("--only", help="regex on clip_id selecting stego rows (covers always kept)")
    p.add_argument("--top3", help="also write the three most discriminative columns here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train an SVM on a features CSV")
    _common(p)
    _svm_flags(p)
    p.add_argument("features")
    p.add_argument("--mask", help="GA mask JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation")
    _common(p)
    _svm_flags(p)
    _ga_flags(p)
    p.add_argument("features")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--no-group", dest="grouped", action="store_const", const=False, default=None,
                   help="allow a cover and its stegos to fall in different folds")
    p.add_argument("--mask", help="fixed GA mask JSON")
    p.add_argument("--ga", action="store_true", help="select features with the GA")
    p.add_argument("--ga-scope", dest="ga_scope", choices=["per-fold", "global"], default="per-fold")
    p.add_argument("--out", help="path prefix for .json and .csv reports")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("ga", help="GA feature selection")
    _common(p)
    _svm_flags(p)
    _ga_flags(p)
    p.add_argument("features")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ga)

    p = sub.add_parser("scan", help="classify WAV files with a trained model")
    _common(p)
    p.add_argument("model")
    p.add_argument("wavs", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("noise-pmf", help="PMF of stego - cover")
    _common(p)
    p.add_argument("cover")
    p.add_argument("--stego")
    p.add_argument("--embedder")
    p.add_argument("--out")
    p.set_defaults(func=cmd_noise_pmf)

    p = sub.add_parser("psd", help="Welch PSD of a WAV (or of its difference from --minus)")
    _common(p)
    p.add_argument("wav")
    p.add_argument("--minus", help="cover WAV; the PSD is taken of wav - cover")
    p.add_argument("--seg-len", dest="seg_len", type=int, default=1024)
    p.add_argument("--hop-len", dest="hop_len", type=int, default=512)
    p.add_argument("--out")
    p.set_defaults(func=cmd_psd)
    return ap


def _error(exc: BaseException, kind: str) -> None:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "kind": kind, "message": str(exc)}) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.print_config:
            print(json.dumps(asdict(cfg), indent=2, sort_keys=True))
            return EXIT_OK
        return args.func(args, cfg)
    except (StegError, ValueError, KeyError, json.JSONDecodeError) as exc:
        _error(exc, "validation")
        return EXIT_VALIDATION
    except OSError as exc:
        _error(exc, "io")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
