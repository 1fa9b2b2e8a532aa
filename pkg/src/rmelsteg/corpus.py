"""Corpus manifests and feature-matrix CSV files."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .audio_io import AudioClip, atomic_write_bytes, downmix_mono, read_wav, write_wav
from .embedders import EmbedderSpec, embed
from .errors import StegError, ValidationError
from .features import column_names
from .ml.validation import COVER, GROUP_SEP, STEGO, Dataset

logger = logging.getLogger(__name__)

MANIFEST_FIELDS = ("clip_id", "path", "role", "embedder", "seed")
ROLE_LABEL = {"COVER": COVER, "STEGO": STEGO}


@dataclass(frozen=True)
class ManifestRow:
    clip_id: str
    path: str
    role: str
    embedder: EmbedderSpec | None = None
    seed: int | None = None

    @property
    def label(self) -> int:
        return ROLE_LABEL[self.role]


@dataclass
class CorpusManifest:
    rows: list[ManifestRow]
    root: Path = Path(".")

    def __post_init__(self):
        seen = set()
        for r in self.rows:
            if r.clip_id in seen:
                raise ValidationError(f"duplicate clip_id {r.clip_id!r}")
            seen.add(r.clip_id)
            if r.role not in ROLE_LABEL:
                raise ValidationError(f"role must be COVER or STEGO, got {r.role!r}")
            if r.role == "STEGO" and r.embedder is None:
                raise ValidationError(f"stego row {r.clip_id!r} lacks an embedder")

    def __len__(self) -> int:
        return len(self.rows)

    def resolve(self, row: ManifestRow) -> Path:
        p = Path(row.path)
        return p if p.is_absolute() else self.root / p

    def load(self, row: ManifestRow) -> AudioClip:
        return downmix_mono(read_wav(self.resolve(row)))

    def covers(self) -> list[ManifestRow]:
        return [r for r in self.rows if r.role == "COVER"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(MANIFEST_FIELDS)
        for r in self.rows:
            w.writerow([r.clip_id, r.path, r.role,
                        "-" if r.embedder is None else r.embedder.to_json(),
                        "-" if r.seed is None else r.seed])
        return buf.getvalue()

    def write(self, path) -> None:
        atomic_write_bytes(path, self.to_csv().encode())

    @classmethod
    def read(cls, path) -> "CorpusManifest":
        path = Path(path)
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != MANIFEST_FIELDS:
                raise ValidationError(f"manifest header must be {','.join(MANIFEST_FIELDS)}")
            rows = []
            for rec in reader:
                emb = None if rec["embedder"] in ("", "-") else EmbedderSpec.from_json(rec["embedder"])
                seed = None if rec["seed"] in ("", "-") else int(rec["seed"])
                rows.append(ManifestRow(rec["clip_id"], rec["path"], rec["role"], emb, seed))
        return cls(rows, path.parent)


def clip_seed(base_seed: int, spec_index: int, cover_index: int) -> int:
    """Distinct, reproducible 63-bit message seed for one stego clip."""
    ss = np.random.SeedSequence([base_seed, spec_index, cover_index])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def spec_tag(index: int, spec: EmbedderSpec) -> str:
    return f"{index:02d}_{spec.kind.value}"


def list_wavs(cover_dir) -> list[Path]:
    return sorted(p for p in Path(cover_dir).iterdir() if p.suffix.lower() == ".wav" and p.is_file())


def generate_corpus(cover_dir, grid: Sequence[EmbedderSpec], out_dir, seed: int = 0) -> tuple[CorpusManifest, int]:
    """Embed every cover with every grid spec; returns the manifest and the
    number of clips that failed (skipped and logged)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    wavs = list_wavs(cover_dir)
    if not wavs:
        raise ValidationError(f"no .wav files in {cover_dir}")
    rows, failures = [], 0
    loaded: list[tuple[str, Path, AudioClip]] = []
    for p in wavs:
        try:
            clip = downmix_mono(read_wav(p))
        except (StegError, OSError) as exc:
            logger.error("skipping cover %s: %s", p, exc)
            failures += 1
            continue
        loaded.append((p.stem, p, clip))
        rows.append(ManifestRow(p.stem, _rel(p, out_dir), "COVER"))
    for si, spec in enumerate(grid):
        tag = spec_tag(si, spec)
        for ci, (cid, _, clip) in enumerate(loaded):
            s = clip_seed(seed, si, ci)
            stego_path = out_dir / "stego" / tag / f"{cid}.wav"
            try:
                write_wav(embed(clip, spec.with_seed(s)), stego_path)
            except (StegError, OSError) as exc:
                logger.error("skipping %s with %s: %s", cid, tag, exc)
                failures += 1
                continue
            rows.append(ManifestRow(f"{cid}{GROUP_SEP}{tag}", _rel(stego_path, out_dir), "STEGO",
                                    spec.with_seed(s), s))
    return CorpusManifest(rows, out_dir), failures


def _rel(p: Path, base: Path) -> str:
    try:
        return str(Path(p).resolve().relative_to(base.resolve()))
    except ValueError:
        import os

        return os.path.relpath(Path(p).resolve(), base.resolve())


def load_grid(text: str) -> list[EmbedderSpec]:
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise ValidationError("embedder grid must be a JSON list of specs")
    return [EmbedderSpec.from_dict(d) for d in data]


# -- feature CSV ----------------------------------------------------------------

def features_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["clip_id", "label"] + column_names(ds.X.shape[1]))
    for cid, lab, row in zip(ds.ids, ds.y, ds.X):
        w.writerow([cid, int(lab)] + [repr(float(v)) for v in row])
    return buf.getvalue()


def read_features_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["clip_id", "label"]:
            raise ValidationError("features CSV must start with clip_id,label")
        ids, labels, rows = [], [], []
        for rec in reader:
            if not rec:
                continue
            if len(rec) != len(header):
                raise ValidationError(f"row {rec[0]!r} has {len(rec)} fields, header has {len(header)}")
            ids.append(rec[0])
            labels.append(int(rec[1]))
            rows.append([float(v) for v in rec[2:]])
    if not rows:
        raise ValidationError("features CSV has no rows")
    return Dataset(np.array(rows), np.array(labels), ids)
