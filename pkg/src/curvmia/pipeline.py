"""Manifest-driven experiment pipeline.

An experiment is a JSON manifest naming the data pool, the training recipe,
the curvature estimator, the attack methods, and a master seed.  Running it
walks fixed stages, each persisting its artifacts into the output directory:

    data     -> dataset.json
    target   -> target.json, target_model.json
    shadows  -> shadows/ledger.json, shadows/model_<j>.json
    scores   -> scores.jsonl
    attacks  -> attacks.jsonl, kl_report.json
    metrics  -> metrics.json, roc_<method>.csv

Everything derives from the manifest's master seed, so a manifest maps to
byte-identical outputs on every run.  Stages are skipped when their recorded
cache key (the manifest digest) matches and their outputs exist; any failure
aborts with the stage name, keeping partial outputs on disk.

The target model is trained exactly like a shadow model but on a seed stream
of its own; its training subset defines the members and the held-out rest of
the pool the nonmembers.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from . import nn
from .attacks import (
    fit_gaussian_pairs, pool_pair, curv_lr_score, curv_nll_score, lira_score,
    yeom_score, watson_offline_score, sablayrolles_score, ye_quantile_score,
    modified_entropy,
)
from .curvature import CurvatureConfig, curvature_of_example, per_call_config
from .data import (
    CsvSchema, Dataset, TransformSpec, apply_transform, dataset_digest,
    dataset_from_dict, dataset_to_dict, gen_gaussian_mixture, load_csv,
    sample_subset, select_lowest_curvature,
)
from .metrics import evaluate_scores, roc_curve, roc_points_csv
from .seeding import PROBE_MODEL_STREAM, TARGET_MODEL_STREAM, derive_seed
from .serialize import digest_of, dumps_canonical, write_canonical
from .theory import empirical_kl_report, fit_bound_curve
from .train import TrainHyper, evaluate_accuracy, load_ensemble, save_ensemble, \
    train_model, train_shadow_ensemble

STAGES = ("data", "target", "shadows", "scores", "attacks", "metrics")

KNOWN_METHODS = ("curv_nll", "curv_lr", "lira", "yeom", "watson_offline",
                 "sablayrolles", "song_mentr", "ye_quantile")

# statistic kinds each method consumes, and on which models
_METHOD_STATS = {
    "curv_nll": {"curvature": "both"},
    "curv_lr": {"curvature": "both"},
    "lira": {"logit": "both"},
    "yeom": {"loss": "target"},
    "watson_offline": {"loss": "both"},
    "sablayrolles": {"loss": "both"},
    "ye_quantile": {"loss": "both"},
    "song_mentr": {"mentr": "target"},
}


class StageError(RuntimeError):
    """Raised when a pipeline stage fails; carries the stage name."""

    def __init__(self, stage: str, cause: BaseException | str):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass(frozen=True)
class DatasetSpec:
    """Where the pool comes from: a generator, a CSV file, or injected data."""

    kind: str = "generator"
    generator: dict = field(default_factory=lambda: {
        "k": 2, "d": 8, "per_class": 200, "separation": 1.5, "noise": 1.0})
    csv_path: str = ""
    csv_label_col: int = -1
    csv_header: bool = False
    inline_digest: str = ""

    def to_dict(self) -> dict:
        if self.kind == "generator":
            return {"kind": self.kind, "generator": dict(self.generator)}
        if self.kind == "csv":
            return {"kind": self.kind, "csv_path": self.csv_path,
                    "csv_label_col": self.csv_label_col, "csv_header": self.csv_header}
        return {"kind": self.kind, "inline_digest": self.inline_digest}

    @staticmethod
    def from_dict(doc: dict) -> "DatasetSpec":
        kind = doc.get("kind", "generator")
        if kind == "generator":
            return DatasetSpec(kind=kind, generator=dict(doc.get("generator", {})))
        if kind == "csv":
            return DatasetSpec(kind=kind, csv_path=doc["csv_path"],
                               csv_label_col=int(doc.get("csv_label_col", -1)),
                               csv_header=bool(doc.get("csv_header", False)))
        return DatasetSpec(kind=kind, inline_digest=doc.get("inline_digest", ""))


@dataclass(frozen=True)
class ExperimentManifest:
    name: str = "experiment"
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    hidden_sizes: tuple[int, ...] = (64,)
    hyper: TrainHyper = field(default_factory=TrainHyper)
    n_shadow_models: int = 32
    shadow_fraction: float = 0.5
    target_fraction: float = 0.5
    curvature: CurvatureConfig = field(default_factory=CurvatureConfig)
    methods: tuple[str, ...] = ("curv_nll", "curv_lr", "lira", "yeom")
    transforms: tuple[TransformSpec, ...] = (TransformSpec(),)
    fpr_targets: tuple[float, ...] = (0.1, 0.01, 0.001)
    master_seed: int = 0
    out_dir: str = "runs/experiment"
    n_jobs: int = 1

    def __post_init__(self) -> None:
        unknown = [m for m in self.methods if m not in KNOWN_METHODS]
        if unknown:
            raise ValueError(f"unknown attack methods {unknown}; known: {list(KNOWN_METHODS)}")
        if self.n_shadow_models < 2:
            raise ValueError("need at least 2 shadow models")

    def digest(self) -> str:
        """Cache key: every field that can change results (not out_dir/n_jobs)."""
        return digest_of({
            "name": self.name,
            "dataset": self.dataset.to_dict(),
            "hidden_sizes": list(self.hidden_sizes),
            "hyper": self.hyper.to_dict(),
            "n_shadow_models": self.n_shadow_models,
            "shadow_fraction": self.shadow_fraction,
            "target_fraction": self.target_fraction,
            "curvature": self.curvature.to_dict(),
            "methods": list(self.methods),
            "transforms": [{"kind": t.kind, "sigma": t.sigma, "seed": t.seed}
                           for t in self.transforms],
            "fpr_targets": list(self.fpr_targets),
            "master_seed": self.master_seed,
        })

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dataset": self.dataset.to_dict(),
            "hidden_sizes": list(self.hidden_sizes),
            "hyper": self.hyper.to_dict(),
            "n_shadow_models": self.n_shadow_models,
            "shadow_fraction": self.shadow_fraction,
            "target_fraction": self.target_fraction,
            "curvature": self.curvature.to_dict(),
            "methods": list(self.methods),
            "transforms": [{"kind": t.kind, "sigma": t.sigma, "seed": t.seed}
                           for t in self.transforms],
            "fpr_targets": list(self.fpr_targets),
            "master_seed": self.master_seed,
            "out_dir": self.out_dir,
            "n_jobs": self.n_jobs,
        }

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentManifest":
        return ExperimentManifest(
            name=doc.get("name", "experiment"),
            dataset=DatasetSpec.from_dict(doc.get("dataset", {})),
            hidden_sizes=tuple(int(h) for h in doc.get("hidden_sizes", (64,))),
            hyper=TrainHyper.from_dict(doc.get("hyper", {})),
            n_shadow_models=int(doc.get("n_shadow_models", 32)),
            shadow_fraction=float(doc.get("shadow_fraction", 0.5)),
            target_fraction=float(doc.get("target_fraction", 0.5)),
            curvature=CurvatureConfig.from_dict(doc.get("curvature", {})),
            methods=tuple(doc.get("methods", ("curv_nll", "curv_lr", "lira", "yeom"))),
            transforms=tuple(
                TransformSpec(kind=t.get("kind", "identity"), sigma=float(t.get("sigma", 0.0)),
                              seed=int(t.get("seed", 0)))
                for t in doc.get("transforms", ({"kind": "identity"},))),
            fpr_targets=tuple(float(t) for t in doc.get("fpr_targets", (0.1, 0.01, 0.001))),
            master_seed=int(doc.get("master_seed", 0)),
            out_dir=doc.get("out_dir", "runs/experiment"),
            n_jobs=int(doc.get("n_jobs", 1)),
        )

    @staticmethod
    def load(path) -> "ExperimentManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return ExperimentManifest.from_dict(json.load(fh))

    def save(self, path) -> None:
        write_canonical(path, self.to_dict())


# -- stage cache -------------------------------------------------------------

def _status_path(out_dir) -> str:
    return os.path.join(out_dir, "stage_status.json")


def _load_status(out_dir) -> dict:
    try:
        with open(_status_path(out_dir), "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        return {}


def _stage_fresh(out_dir, stage: str, key: str, outputs: list[str]) -> bool:
    status = _load_status(out_dir)
    entry = status.get(stage)
    if not entry or entry.get("key") != key:
        return False
    return all(os.path.exists(os.path.join(out_dir, p)) for p in outputs)


def _mark_stage(out_dir, stage: str, key: str, outputs: list[str]) -> None:
    status = _load_status(out_dir)
    status[stage] = {"key": key, "outputs": outputs}
    write_canonical(_status_path(out_dir), status)


# -- stages ------------------------------------------------------------------

def _build_dataset(manifest: ExperimentManifest, injected: Dataset | None) -> Dataset:
    spec = manifest.dataset
    if spec.kind == "inline":
        if injected is None:
            raise ValueError("manifest declares an inline dataset but none was provided")
        if spec.inline_digest and dataset_digest(injected) != spec.inline_digest:
            raise ValueError("provided dataset does not match the manifest's inline digest")
        return injected
    if spec.kind == "generator":
        g = spec.generator
        return gen_gaussian_mixture(
            k=int(g.get("k", 2)), d=int(g.get("d", 8)), per_class=int(g.get("per_class", 200)),
            separation=float(g.get("separation", 1.5)), noise=float(g.get("noise", 1.0)),
            seed=derive_seed(manifest.master_seed, 0) if g.get("seed") is None
            else int(g["seed"]))
    if spec.kind == "csv":
        schema = CsvSchema(label_col=spec.csv_label_col, header=spec.csv_header)
        return load_csv(spec.csv_path, schema)
    raise ValueError(f"unknown dataset spec kind {spec.kind!r}")


def stage_data(manifest: ExperimentManifest, out_dir, injected: Dataset | None = None) -> Dataset:
    dataset = _build_dataset(manifest, injected)
    write_canonical(os.path.join(out_dir, "dataset.json"), dataset_to_dict(dataset))
    return dataset


def _load_dataset(out_dir) -> Dataset:
    with open(os.path.join(out_dir, "dataset.json"), "r", encoding="utf-8") as fh:
        return dataset_from_dict(json.load(fh))


def stage_target(manifest: ExperimentManifest, out_dir, dataset: Dataset) -> tuple[np.ndarray, nn.MlpParams]:
    seed = derive_seed(manifest.master_seed, TARGET_MODEL_STREAM)
    mask = sample_subset(dataset, manifest.target_fraction, seed)
    arch = (dataset.d, *manifest.hidden_sizes, dataset.k)
    params = train_model(dataset, mask, arch, manifest.hyper, seed)
    nn.save_params(params, os.path.join(out_dir, "target_model.json"))
    write_canonical(os.path.join(out_dir, "target.json"), {
        "mask": mask.astype(int).tolist(),
        "seed": seed,
        "model_digest": nn.params_digest(params),
        "train_accuracy": evaluate_accuracy(params, dataset, mask),
        "holdout_accuracy": evaluate_accuracy(params, dataset, ~mask),
        "dataset_digest": dataset_digest(dataset),
    })
    return mask, params


def _load_target(out_dir) -> tuple[np.ndarray, nn.MlpParams]:
    with open(os.path.join(out_dir, "target.json"), "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return np.asarray(doc["mask"], dtype=bool), nn.load_params(
        os.path.join(out_dir, "target_model.json"))


def stage_shadows(manifest: ExperimentManifest, out_dir, dataset: Dataset):
    arch = (dataset.d, *manifest.hidden_sizes, dataset.k)
    ensemble = train_shadow_ensemble(dataset, manifest.n_shadow_models,
                                     manifest.shadow_fraction, arch, manifest.hyper,
                                     manifest.master_seed, n_jobs=manifest.n_jobs)
    save_ensemble(ensemble, os.path.join(out_dir, "shadows"))
    return ensemble


def _required_stats(methods) -> dict[str, str]:
    """kind -> 'target' or 'both', unioned over methods."""
    needed: dict[str, str] = {}
    for method in methods:
        for kind, scope in _METHOD_STATS[method].items():
            if scope == "both" or needed.get(kind) == "both":
                needed[kind] = "both"
            else:
                needed[kind] = "target"
    return needed


def _transformed_features(dataset: Dataset, t: TransformSpec) -> np.ndarray:
    if t.kind == "identity":
        return dataset.X
    return np.stack([apply_transform(dataset.example(i), t).x for i in range(dataset.m)])


def _statistics_for_model(dataset: Dataset, params: nn.MlpParams, kinds, manifest,
                          model_digest: str) -> dict[str, np.ndarray]:
    """Per-kind statistic vector [m] for one model, averaged over transforms."""
    per_kind = {kind: [] for kind in kinds}
    for t_index, t in enumerate(manifest.transforms):
        Xt = _transformed_features(dataset, t)
        y = dataset.y
        if "loss" in kinds or "logit" in kinds or "mentr" in kinds:
            probs = nn.forward_probs(params, Xt)
            p_true = probs[np.arange(dataset.m), y]
        if "loss" in kinds:
            per_kind["loss"].append(-np.log(np.maximum(p_true, nn.PROB_CLIP)))
        if "logit" in kinds:
            p = np.clip(p_true, nn.PROB_CLIP, 1.0 - nn.PROB_CLIP)
            per_kind["logit"].append(np.log(p) - np.log1p(-p))
        if "mentr" in kinds:
            per_kind["mentr"].append(modified_entropy(probs, y))
        if "curvature" in kinds:
            base_cfg = replace(manifest.curvature,
                               seed=derive_seed(manifest.curvature.seed, t_index))
            values = np.empty(dataset.m)
            for i in range(dataset.m):
                ex = apply_transform(dataset.example(i), t)
                cfg = per_call_config(base_cfg, ex.id, model_digest)
                values[i] = curvature_of_example(params, ex, cfg)
            per_kind["curvature"].append(values)
    return {kind: np.mean(np.stack(stack), axis=0) for kind, stack in per_kind.items()}


def stage_scores(manifest: ExperimentManifest, out_dir, dataset: Dataset,
                 target_params: nn.MlpParams, ensemble) -> dict:
    """Write scores.jsonl with every (example, model, kind, value) observation."""
    needed = _required_stats(manifest.methods)
    shadow_kinds = [k for k, scope in needed.items() if scope == "both"]
    target_kinds = list(needed.keys())
    scoring_digest = digest_of({"curvature": manifest.curvature.to_dict(),
                                "transforms": [{"kind": t.kind, "sigma": t.sigma,
                                                "seed": t.seed}
                                               for t in manifest.transforms]})
    target_digest = nn.params_digest(target_params)
    shadow_digests = ensemble.model_digests

    def one_model(params, digest, kinds):
        return _statistics_for_model(dataset, params, kinds, manifest, digest)

    if manifest.n_jobs == 1 or len(ensemble.models) == 0:
        shadow_stats = [one_model(p, dg, shadow_kinds)
                        for p, dg in zip(ensemble.models, shadow_digests)]
    else:
        shadow_stats = Parallel(n_jobs=manifest.n_jobs)(
            delayed(one_model)(p, dg, shadow_kinds)
            for p, dg in zip(ensemble.models, shadow_digests))
    target_stats = one_model(target_params, target_digest, target_kinds)

    path = os.path.join(out_dir, "scores.jsonl")
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for j, stats in enumerate(shadow_stats):
            for kind in shadow_kinds:
                for i in range(dataset.m):
                    fh.write(dumps_canonical({
                        "example_id": i, "model_digest": shadow_digests[j],
                        "kind": kind, "value": float(stats[kind][i]),
                        "config_digest": scoring_digest}) + "\n")
        for kind in target_kinds:
            for i in range(dataset.m):
                fh.write(dumps_canonical({
                    "example_id": i, "model_digest": target_digest,
                    "kind": kind, "value": float(target_stats[kind][i]),
                    "config_digest": scoring_digest}) + "\n")
    os.replace(tmp, path)
    return {"shadow": shadow_stats, "target": target_stats,
            "shadow_digests": shadow_digests, "target_digest": target_digest}


def _load_scores(out_dir, ensemble, target_digest: str, m: int) -> dict:
    """Rebuild per-kind matrices from scores.jsonl."""
    shadow_index = {dg: j for j, dg in enumerate(ensemble.model_digests)}
    shadow: dict[str, np.ndarray] = {}
    target: dict[str, np.ndarray] = {}
    with open(os.path.join(out_dir, "scores.jsonl"), "r", encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            kind, i, value = rec["kind"], rec["example_id"], rec["value"]
            if rec["model_digest"] == target_digest:
                target.setdefault(kind, np.full(m, np.nan))[i] = value
            else:
                j = shadow_index[rec["model_digest"]]
                shadow.setdefault(kind, np.full((len(shadow_index), m), np.nan))[j, i] = value
    return {"shadow": shadow, "target": target}


def stage_attacks(manifest: ExperimentManifest, out_dir, dataset: Dataset,
                  target_mask: np.ndarray, ensemble, scores: dict) -> dict[str, np.ndarray]:
    """Per-method member-oriented scores for every pool example."""
    ledger = ensemble.ledger
    shadow, target = scores["shadow"], scores["target"]
    values: dict[str, np.ndarray] = {}
    curvature_pairs = None
    kl_report = None
    for method in manifest.methods:
        out = np.empty(dataset.m)
        if method in ("curv_nll", "curv_lr"):
            if curvature_pairs is None:
                curvature_pairs = fit_gaussian_pairs(shadow["curvature"], ledger)
                kl_report = empirical_kl_report(curvature_pairs)
            if method == "curv_lr":
                pairs = [pool_pair(p) for p in curvature_pairs]
                score_fn = curv_lr_score
            else:
                pairs = curvature_pairs
                score_fn = curv_nll_score
            for i in range(dataset.m):
                out[i] = score_fn(float(target["curvature"][i]), pairs[i])
        elif method == "lira":
            pairs = fit_gaussian_pairs(shadow["logit"], ledger)
            for i in range(dataset.m):
                out[i] = lira_score(float(target["logit"][i]), pairs[i])
        elif method == "yeom":
            out = np.array([yeom_score(v) for v in target["loss"]])
        elif method == "watson_offline":
            for i in range(dataset.m):
                out_losses = shadow["loss"][~ledger.in_matrix[:, i], i]
                out[i] = watson_offline_score(float(target["loss"][i]), out_losses)
        elif method == "sablayrolles":
            for i in range(dataset.m):
                out[i] = sablayrolles_score(float(target["loss"][i]), shadow["loss"][:, i])
        elif method == "ye_quantile":
            for i in range(dataset.m):
                out_losses = shadow["loss"][~ledger.in_matrix[:, i], i]
                out[i] = ye_quantile_score(float(target["loss"][i]), out_losses)
        elif method == "song_mentr":
            out = -target["mentr"]
        values[method] = out

    path = os.path.join(out_dir, "attacks.jsonl")
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for method in manifest.methods:
            for i in range(dataset.m):
                fh.write(dumps_canonical({
                    "example_id": i, "method": method,
                    "value": float(values[method][i]),
                    "is_member_truth": bool(target_mask[i])}) + "\n")
    os.replace(tmp, path)
    if kl_report is not None:
        write_canonical(os.path.join(out_dir, "kl_report.json"), kl_report)
    return values


def _load_attacks(out_dir) -> tuple[dict[str, np.ndarray], np.ndarray]:
    per_method: dict[str, dict[int, float]] = {}
    truth: dict[int, bool] = {}
    with open(os.path.join(out_dir, "attacks.jsonl"), "r", encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            per_method.setdefault(rec["method"], {})[rec["example_id"]] = rec["value"]
            truth[rec["example_id"]] = rec["is_member_truth"]
    m = len(truth)
    mask = np.array([truth[i] for i in range(m)], dtype=bool)
    values = {method: np.array([vals[i] for i in range(m)])
              for method, vals in per_method.items()}
    return values, mask


def stage_metrics(manifest: ExperimentManifest, out_dir, attack_values: dict[str, np.ndarray],
                  target_mask: np.ndarray) -> dict:
    report = {}
    for method in manifest.methods:
        scores = attack_values[method]
        members, nonmembers = scores[target_mask], scores[~target_mask]
        report[method] = evaluate_scores(members, nonmembers, manifest.fpr_targets)
        curve = roc_curve(members, nonmembers)
        roc_path = os.path.join(out_dir, f"roc_{method}.csv")
        with open(roc_path + ".tmp", "w", encoding="utf-8") as fh:
            fh.write(roc_points_csv(curve))
        os.replace(roc_path + ".tmp", roc_path)
    write_canonical(os.path.join(out_dir, "metrics.json"), report)
    return report


# -- orchestration -----------------------------------------------------------

_STAGE_OUTPUTS = {
    "data": ["dataset.json"],
    "target": ["target.json", "target_model.json"],
    "shadows": [os.path.join("shadows", "ledger.json")],
    "scores": ["scores.jsonl"],
    "attacks": ["attacks.jsonl"],
    "metrics": ["metrics.json"],
}


def run_experiment(manifest: ExperimentManifest, upto: str = "metrics",
                   dataset: Dataset | None = None) -> dict:
    """Run the pipeline through stage `upto`; returns a summary dict.

    Fresh stages (cache key matching, outputs present) are skipped and
    reloaded from disk.
    """
    if upto not in STAGES:
        raise ValueError(f"unknown stage {upto!r}; stages are {STAGES}")
    out_dir = manifest.out_dir
    os.makedirs(out_dir, exist_ok=True)
    manifest.save(os.path.join(out_dir, "manifest.json"))
    key = manifest.digest()
    last = STAGES.index(upto)
    summary: dict = {"out_dir": out_dir, "manifest_digest": key, "stages_run": []}

    def guard(stage, fn):
        if _stage_fresh(out_dir, stage, key, _STAGE_OUTPUTS[stage]):
            return None
        try:
            result = fn()
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage, exc) from exc
        _mark_stage(out_dir, stage, key, _STAGE_OUTPUTS[stage])
        summary["stages_run"].append(stage)
        return result

    ds = guard("data", lambda: stage_data(manifest, out_dir, dataset))
    if ds is None:
        ds = _load_dataset(out_dir)
    summary["dataset_digest"] = dataset_digest(ds)
    if last < STAGES.index("target"):
        return summary

    target = guard("target", lambda: stage_target(manifest, out_dir, ds))
    target_mask, target_params = target if target else _load_target(out_dir)
    if last < STAGES.index("shadows"):
        return summary

    ensemble = guard("shadows", lambda: stage_shadows(manifest, out_dir, ds))
    if ensemble is None:
        ensemble = load_ensemble(os.path.join(out_dir, "shadows"))
    if last < STAGES.index("scores"):
        return summary

    scored = guard("scores", lambda: stage_scores(manifest, out_dir, ds,
                                                  target_params, ensemble))
    if scored is not None:
        scores = {"shadow": {k: np.stack([s[k] for s in scored["shadow"]])
                             for k in scored["shadow"][0]} if scored["shadow"] else {},
                  "target": scored["target"]}
    else:
        scores = _load_scores(out_dir, ensemble, nn.params_digest(target_params), ds.m)
    if last < STAGES.index("attacks"):
        return summary

    attacks = guard("attacks", lambda: stage_attacks(manifest, out_dir, ds, target_mask,
                                                     ensemble, scores))
    if attacks is None:
        attacks, target_mask = _load_attacks(out_dir)
    if last < STAGES.index("metrics"):
        return summary

    report = guard("metrics", lambda: stage_metrics(manifest, out_dir, attacks, target_mask))
    if report is None:
        with open(os.path.join(out_dir, "metrics.json"), "r", encoding="utf-8") as fh:
            report = json.load(fh)
    summary["metrics"] = report
    return summary


# -- dataset-size sweep --------------------------------------------------------

def sweep_dataset_size(manifest: ExperimentManifest, sizes, selection: str = "random") -> list[dict]:
    """Run one experiment per pool size; returns rows of per-method metrics.

    `selection` picks which examples form each smaller pool: "random" samples
    uniformly; "lowest_curvature" scores the full pool once on a probe model
    (trained on everything with a derived seed) and keeps the lowest-scoring
    examples.  Each run keeps the manifest's member fraction, so a size-s
    pool trains the target on floor(s * target_fraction) members.
    """
    if selection not in ("random", "lowest_curvature"):
        raise ValueError(f"unknown selection {selection!r}")
    pool = _build_dataset(manifest, None)
    sizes = [int(s) for s in sizes]
    for s in sizes:
        if not 2 <= s <= pool.m:
            raise ValueError(f"size {s} outside [2, {pool.m}]")
    pool_scores = None
    if selection == "lowest_curvature":
        probe_seed = derive_seed(manifest.master_seed, PROBE_MODEL_STREAM)
        arch = (pool.d, *manifest.hidden_sizes, pool.k)
        probe = train_model(pool, np.ones(pool.m, dtype=bool), arch, manifest.hyper,
                            probe_seed)
        probe_digest = nn.params_digest(probe)
        pool_scores = np.array([
            curvature_of_example(probe, pool.example(i),
                                 per_call_config(manifest.curvature, i, probe_digest))
            for i in range(pool.m)])
    rows: list[dict] = []
    for index, size in enumerate(sizes):
        if selection == "random":
            from .data import sample_count
            mask = sample_count(pool, size, derive_seed(manifest.master_seed, 1000 + index))
        else:
            mask = select_lowest_curvature(pool, pool_scores, size)
        sub = pool.restrict(mask, name=f"{pool.name}_size{size}")
        sub_manifest = replace(
            manifest,
            dataset=DatasetSpec(kind="inline", inline_digest=dataset_digest(sub)),
            out_dir=os.path.join(manifest.out_dir, f"size_{size}"))
        summary = run_experiment(sub_manifest, dataset=sub)
        for method, report in summary["metrics"].items():
            rows.append({"size": size, "method": method,
                         "auroc": report["auroc"], "bal_acc": report["bal_acc"]})
    return rows


def sweep_rows_csv(rows) -> str:
    lines = ["size,method,auroc,bal_acc"]
    lines += [f"{r['size']},{r['method']},{format(r['auroc'], '.17g')},"
              f"{format(r['bal_acc'], '.17g')}" for r in rows]
    return "\n".join(lines) + "\n"


# -- bound-curve fit from CSV ---------------------------------------------------

def fit_bound_file(points_csv, out_path=None) -> dict:
    """Fit the privacy-vs-performance curve to (epsilon, value) CSV rows."""
    points = []
    with open(points_csv, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 2:
                raise ValueError(f"{points_csv}:{lineno}: expected 'epsilon,value'")
            try:
                points.append((float(cells[0]), float(cells[1])))
            except ValueError:
                if lineno == 1:  # header row
                    continue
                raise ValueError(f"{points_csv}:{lineno}: non-numeric row {line!r}") from None
    result = fit_bound_curve(points)
    doc = result.to_dict()
    if out_path is not None:
        write_canonical(out_path, doc)
    return doc
