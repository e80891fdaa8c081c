"""Offline batch generation of synthetic annotated samples.

A fixed number of synthetic samples is produced before any training happens,
so the augmentation stays agnostic to the downstream segmentation framework;
the synthetic set plus the originals form the training pool.

Determinism contract: every record is a pure function of (master_seed, t,
sorted roster). Each sample draws from its own generator seeded by a
counter-based derivation from the master seed, so results are independent of
worker count, scheduling, and directory enumeration order. Files are written
with deterministic serialization and their digests are recorded in a JSONL
manifest, one record per sample in index order.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nifti
from .baselines import DEFAULT_MIXUP_ALPHA, cutmix_pair, mixup_pair
from .carve import carvemix_pair
from .distance import DistanceUnits
from .errors import (
    CarveMixError,
    ConfigError,
    IoError,
    NoEligibleDonor,
)
from .grid import AnnotatedSample, spacings_close

METHODS = ("carvemix", "mixup", "cutmix")
ENV_WORKERS = "CARVEMIX_WORKERS"
MANIFEST_NAME = "manifest.jsonl"
NIFTI_SUFFIXES = (".nii", ".nii.gz")


@dataclass(frozen=True)
class GenerationConfig:
    """Everything the batch loop needs; validated against the chosen method."""

    method: str
    count: int
    master_seed: int
    output_dir: str
    images_dir: str | None = None
    labels_dir: str | None = None
    units: DistanceUnits = DistanceUnits.VOXEL
    alpha: float = DEFAULT_MIXUP_ALPHA
    workers: int | None = None
    allow_self_pairs: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.count < 0:
            raise ConfigError(f"count must be >= 0, got {self.count}")
        if not (0 <= int(self.master_seed) < 2 ** 64):
            raise ConfigError(f"master_seed must fit in 64 unsigned bits, got {self.master_seed}")
        if self.method == "mixup" and not (self.alpha > 0):
            raise ConfigError(f"mixup alpha must be positive, got {self.alpha}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class RosterEntry:
    """One training subject: id, file locations, and its lesion voxel count."""

    sample_id: str
    image_path: str
    label_path: str
    lesion_voxels: int


@dataclass
class GenerationManifest:
    """Ordered per-sample provenance records."""

    records: list[dict] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def write_jsonl(self, path):
        lines = [json.dumps(rec) for rec in self.records]
        text = "".join(line + "\n" for line in lines)
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc

    @classmethod
    def load(cls, path) -> "GenerationManifest":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise IoError(f"cannot read {path}: {exc}") from exc
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
        return cls(records)


def derive_sample_seed(master_seed: int, t: int) -> int:
    """Counter-based 64-bit seed for sample t; stable across platforms."""
    msg = (
        b"carvemix-sample\x00"
        + int(master_seed).to_bytes(8, "little")
        + int(t).to_bytes(8, "little")
    )
    return int.from_bytes(hashlib.sha256(msg).digest()[:8], "little")


def default_workers() -> int:
    env = os.environ.get(ENV_WORKERS, "").strip()
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"{ENV_WORKERS} must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError(f"{ENV_WORKERS} must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def _list_nifti(directory) -> dict[str, Path]:
    d = Path(directory)
    if not d.is_dir():
        raise IoError(f"not a directory: {d}")
    out = {}
    for p in sorted(d.iterdir()):
        name = p.name
        for suf in NIFTI_SUFFIXES:
            if name.endswith(suf):
                out[name[: -len(suf)]] = p
                break
    return out


def build_roster(images_dir, labels_dir) -> list[RosterEntry]:
    """Pair image and label files by stem, sorted by id; counts lesion voxels.

    Unpaired files are an error here (use validate_roster for a survey).
    """
    images = _list_nifti(images_dir)
    labels = _list_nifti(labels_dir)
    missing_lbl = sorted(set(images) - set(labels))
    missing_img = sorted(set(labels) - set(images))
    if missing_lbl or missing_img:
        raise ConfigError(
            f"unpaired files: images without labels {missing_lbl[:5]}, "
            f"labels without images {missing_img[:5]}"
        )
    if not images:
        raise ConfigError(f"no NIfTI files found under {images_dir}")
    roster = []
    for sample_id in sorted(images):
        mask = nifti.read_mask(labels[sample_id])
        roster.append(
            RosterEntry(
                sample_id=sample_id,
                image_path=str(images[sample_id]),
                label_path=str(labels[sample_id]),
                lesion_voxels=mask.foreground_voxels,
            )
        )
    return roster


def _load_sample(entry: RosterEntry) -> AnnotatedSample:
    image = nifti.read_volume(entry.image_path)
    label = nifti.read_mask(entry.label_path)
    return AnnotatedSample(image=image, label=label, id=entry.sample_id)


def _pick_pair(rng, roster, eligible, config) -> tuple[int, int]:
    n = len(roster)
    donor = int(rng.integers(0, n))
    if config.method == "carvemix":
        retries = 0
        while roster[donor].lesion_voxels == 0:
            if retries >= n:
                # Bounded retries exhausted: fall back to a direct draw over
                # the eligible subset (same conditional law, guaranteed stop).
                donor = eligible[int(rng.integers(0, len(eligible)))]
                break
            donor = int(rng.integers(0, n))
            retries += 1
    host = int(rng.integers(0, n))
    if not config.allow_self_pairs:
        retries = 0
        while host == donor and n > 1 and retries < n:
            host = int(rng.integers(0, n))
            retries += 1
    return donor, host


def _generate_one(config: GenerationConfig, roster, eligible, t: int) -> dict:
    seed = derive_sample_seed(config.master_seed, t)
    rng = np.random.default_rng(seed)
    donor_idx, host_idx = _pick_pair(rng, roster, eligible, config)
    donor = _load_sample(roster[donor_idx])
    host = _load_sample(roster[host_idx])

    if config.method == "carvemix":
        image, label, spec = carvemix_pair(donor, host, rng, units=config.units, seed=seed)
        payload_label = nifti.encode_mask(label)
        extras = spec.to_record()
    elif config.method == "mixup":
        image, label, spec = mixup_pair(donor, host, config.alpha, rng, seed=seed)
        payload_label = nifti.encode_soft_mask(label)
        extras = spec.to_record()
    else:
        image, label, spec = cutmix_pair(donor, host, rng, seed=seed)
        payload_label = nifti.encode_soft_mask(label)
        extras = spec.to_record()

    payload_image = nifti.encode_volume(image)
    gz_image = nifti.gzip_bytes(payload_image)
    gz_label = nifti.gzip_bytes(payload_label)

    stem = f"synthetic_{t:06d}"
    image_rel = f"images/{stem}.nii.gz"
    label_rel = f"labels/{stem}.nii.gz"
    out = Path(config.output_dir)
    try:
        (out / image_rel).write_bytes(gz_image)
        (out / label_rel).write_bytes(gz_label)
    except OSError as exc:
        raise IoError(f"cannot write under {out}: {exc}") from exc

    record = {
        "t": t,
        "donor_id": roster[donor_idx].sample_id,
        "host_id": roster[host_idx].sample_id,
        "method": config.method,
        "seed": seed,
    }
    record.update(extras)
    record.update(
        {
            "image": image_rel,
            "label": label_rel,
            "image_sha256": hashlib.sha256(gz_image).hexdigest(),
            "label_sha256": hashlib.sha256(gz_label).hexdigest(),
            "label_sum": float(np.asarray(label.data, dtype=np.float64).sum()),
        }
    )
    return record


def generate_dataset(config: GenerationConfig, roster: list[RosterEntry]) -> GenerationManifest:
    """Run the batch loop: T samples, each from a per-index seeded generator.

    Donor and host are drawn independently and uniformly from the roster
    (self-pairs allowed by default); donors with empty lesions are re-drawn
    when carving. Outputs land under config.output_dir (images/, labels/,
    manifest.jsonl). Returns the manifest, already written to disk.
    """
    if not roster:
        raise ConfigError("roster is empty")
    ids = [r.sample_id for r in roster]
    if len(set(ids)) != len(ids):
        raise ConfigError("roster ids must be unique")
    roster = sorted(roster, key=lambda r: r.sample_id)

    eligible = [k for k, r in enumerate(roster) if r.lesion_voxels > 0]
    if config.method == "carvemix" and not eligible:
        raise NoEligibleDonor("every roster annotation is empty; cannot carve")

    out = Path(config.output_dir)
    try:
        (out / "images").mkdir(parents=True, exist_ok=True)
        (out / "labels").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directories under {out}: {exc}") from exc

    records: list[dict] = []
    if config.count > 0:
        workers = config.workers or default_workers()
        if workers == 1:
            records = [
                _generate_one(config, roster, eligible, t)
                for t in range(1, config.count + 1)
            ]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_generate_one, config, roster, eligible, t)
                    for t in range(1, config.count + 1)
                ]
                records = [f.result() for f in futures]
        records.sort(key=lambda r: r["t"])

    manifest = GenerationManifest(records)
    manifest.write_jsonl(out / MANIFEST_NAME)
    return manifest


def validate_roster(images_dir, labels_dir) -> dict:
    """Survey an image/label directory pair without failing on bad samples.

    Reports, per id: grid agreement, spacing agreement, label binarity,
    lesion voxel count, and donor eligibility; unpaired files are listed.
    """
    images = _list_nifti(images_dir)
    labels = _list_nifti(labels_dir)
    report = {
        "images_dir": str(images_dir),
        "labels_dir": str(labels_dir),
        "unpaired_images": sorted(set(images) - set(labels)),
        "unpaired_labels": sorted(set(labels) - set(images)),
        "samples": [],
    }
    ok_count = 0
    eligible = 0
    for sample_id in sorted(set(images) & set(labels)):
        entry: dict = {"id": sample_id, "issues": []}
        image = label = None
        try:
            image = nifti.read_volume(images[sample_id])
            entry["image_shape"] = list(image.shape.as_tuple())
        except CarveMixError as exc:
            entry["issues"].append(f"image: {type(exc).__name__}: {exc}")
        try:
            label = nifti.read_mask(labels[sample_id])
            entry["label_shape"] = list(label.shape.as_tuple())
        except CarveMixError as exc:
            entry["issues"].append(f"label: {type(exc).__name__}: {exc}")
        if image is not None and label is not None:
            if image.shape != label.shape:
                entry["issues"].append(
                    f"shape mismatch: image {image.shape.as_tuple()} vs label {label.shape.as_tuple()}"
                )
            elif not spacings_close(image.spacing, label.spacing):
                entry["issues"].append(
                    f"spacing mismatch: image {image.spacing.as_tuple()} vs label {label.spacing.as_tuple()}"
                )
        if label is not None:
            entry["lesion_voxels"] = label.foreground_voxels
            entry["eligible_donor"] = label.foreground_voxels > 0
            if label.foreground_voxels == 0:
                entry["issues"].append("empty lesion: ineligible donor, eligible host")
            elif not entry["issues"]:
                eligible += 1
        if not entry["issues"]:
            ok_count += 1
        report["samples"].append(entry)
    report["summary"] = {
        "paired": len(report["samples"]),
        "ok": ok_count,
        "eligible_donors": eligible,
        "with_issues": len(report["samples"]) - ok_count,
    }
    return report


def _distribution(values: list[float], bins: int = 16) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    counts, edges = np.histogram(arr, bins=bins)
    return {
        "count": int(arr.size),
        "min": float(arr.min()),
        "max": float(arr.max()),
        "mean": float(arr.mean()),
        "histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
    }


def dataset_stats(manifest: GenerationManifest | list[dict]) -> dict:
    """Machine-readable summary of a manifest: threshold law, usage, volumes."""
    records = list(manifest)
    stats: dict = {"total": len(records), "methods": {}}
    by_method: dict[str, list[dict]] = {}
    for rec in records:
        by_method.setdefault(rec["method"], []).append(rec)
    for method, recs in sorted(by_method.items()):
        lams = [float(r["lambda"]) for r in recs]
        donors: dict[str, int] = {}
        hosts: dict[str, int] = {}
        for r in recs:
            donors[r["donor_id"]] = donors.get(r["donor_id"], 0) + 1
            hosts[r["host_id"]] = hosts.get(r["host_id"], 0) + 1
        entry = {
            "count": len(recs),
            "lambda": _distribution(lams),
            "lambda_below_zero": int(sum(1 for v in lams if v < 0)),
            "donor_usage": dict(sorted(donors.items())),
            "host_usage": dict(sorted(hosts.items())),
        }
        sums = [float(r["label_sum"]) for r in recs if "label_sum" in r]
        if sums:
            entry["label_sum"] = _distribution(sums)
        stats["methods"][method] = entry
    return stats
