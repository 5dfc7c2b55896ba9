"""Execute one experiment config and emit its artifact set.

Each dispatch function resolves its inputs before writing anything, so a bad
path or a bad config leaves no partial artifacts behind. Artifacts are written
through the atomic helpers and the manifest comes last; a directory containing
manifest.json is therefore a complete run.
"""

from __future__ import annotations

import datetime as _dt
import os
from typing import Callable

import numpy as np

from . import __version__, SCHEMA_VERSION
from . import propcheck, reporting
from .bounds import BoundInputs, class_density_pair, evaluate_bound, save_bound_json
from .config import (
    ArtifactRecord,
    BoundConfig,
    CheckConfig,
    DataSource,
    DifficultyConfig,
    ExperimentConfig,
    GenConfig,
    ReportConfig,
    RunManifest,
    TrainConfig,
)
from .datagen import Dataset, apply_label_noise, gen_gaussian_mixture, load_dataset_csv, save_dataset_csv
from .difficulty import EstimatorConfig, ModelFamily, estimate_error_profile, save_profile_csv
from .errors import SpecificationError
from .maxmargin import solve_max_margin
from .models import LossSpec, init_params, save_checkpoint
from .optimizer import Hyper, WeightScheme, make_weights, save_trace_csv, train
from .seeding import child_sequence
from .serialization import config_digest, fmt_float, sha256_file, write_csv, write_json


def _utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _load_data(source: DataSource) -> Dataset:
    if source.path is not None:
        if not os.path.isfile(source.path):
            raise FileNotFoundError(f"dataset not found: {source.path}")
        ds = load_dataset_csv(source.path)
    else:
        ds = gen_gaussian_mixture(source.mixture.build())
    if source.label_noise is not None:
        ds = apply_label_noise(ds, source.label_noise.build())
    return ds


def _scheme(cfg) -> WeightScheme:
    return WeightScheme(
        kind=cfg.kind, lower=cfg.lower, upper=cfg.upper, dynamic=cfg.dynamic,
        custom=None if cfg.custom is None else np.asarray(cfg.custom, dtype=float),
    )


def _run_gen(config: GenConfig, out_dir: str, jobs: int) -> list[str]:
    ds = gen_gaussian_mixture(config.mixture.build())
    if config.label_noise is not None:
        ds = apply_label_noise(ds, config.label_noise.build())
    path = os.path.join(out_dir, "dataset.csv")
    save_dataset_csv(ds, path)
    return [path]


def _run_train(config: TrainConfig, out_dir: str, jobs: int) -> list[str]:
    ds = _load_data(config.data)
    loss = LossSpec(kind=config.loss.kind)
    hyper = Hyper(
        learning_rate=config.hyper.learning_rate, epochs=config.hyper.epochs,
        reg_lambda=config.hyper.reg_lambda, reg_power=config.hyper.reg_power,
    )
    init = init_params(config.model.kind, config.model.dims(ds.dim), seed=config.seed)

    reference = None
    solution = None
    if config.reference == "max_margin":
        solution = solve_max_margin(ds)
        reference = solution.direction

    params, trace = train(init, ds, _scheme(config.scheme), loss, hyper,
                          reference_direction=reference)

    paths = []
    trace_path = os.path.join(out_dir, "trace.csv")
    save_trace_csv(trace, trace_path)
    paths.append(trace_path)
    model_path = os.path.join(out_dir, "model.json")
    save_checkpoint(params, model_path)
    paths.append(model_path)
    if solution is not None:
        mm_path = os.path.join(out_dir, "maxmargin.json")
        write_json(mm_path, {
            "schema_version": SCHEMA_VERSION,
            "direction": [float(v) for v in solution.direction],
            "gamma_star": float(solution.gamma_star),
            "support_set": list(solution.support_set),
            "p": [float(v) for v in solution.dual_coefficients],
        })
        paths.append(mm_path)
    return paths


def _run_difficulty(config: DifficultyConfig, out_dir: str, jobs: int) -> list[str]:
    ds = _load_data(config.data)
    family = ModelFamily(
        kind=config.model.kind, dims=config.model.dims(ds.dim),
        loss=LossSpec(kind=config.loss.kind),
        hyper=Hyper(
            learning_rate=config.hyper.learning_rate, epochs=config.hyper.epochs,
            reg_lambda=config.hyper.reg_lambda, reg_power=config.hyper.reg_power,
        ),
    )
    cfg = EstimatorConfig(
        family=family, folds=config.folds, repeats=config.repeats,
        mode=config.mode, delta=config.delta, tau_inv=config.tau_inv,
        master_seed=config.master_seed,
    )
    profile = estimate_error_profile(ds, cfg, jobs=jobs,
                                     with_input_gradients=config.with_input_gradients)
    paths = []
    profile_path = os.path.join(out_dir, "profile.csv")
    save_profile_csv(profile, profile_path)
    paths.append(profile_path)
    if profile.mean_input_gradient is not None:
        grad_path = os.path.join(out_dir, "input_gradient.csv")
        g = profile.mean_input_gradient
        header = ["idx"] + [f"g{j}" for j in range(g.shape[1])]
        rows = ([str(i)] + [fmt_float(v) for v in g[i]] for i in range(g.shape[0]))
        write_csv(grad_path, header, rows)
        paths.append(grad_path)
    return paths


def _run_bound(config: BoundConfig, out_dir: str, jobs: int) -> list[str]:
    ds_eval = _load_data(config.data)
    ds_train = ds_eval if config.train_data is None else _load_data(config.train_data)

    scheme = _scheme(config.scheme)
    weights = make_weights(scheme, n=ds_train.n, class_of=ds_train.class_of)

    loss = LossSpec(kind=config.loss.kind)
    hyper = Hyper(
        learning_rate=config.hyper.learning_rate, epochs=config.hyper.epochs,
        reg_lambda=config.hyper.reg_lambda, reg_power=config.hyper.reg_power,
    )
    models = []
    for i in range(config.ensemble):
        init_seed = int(child_sequence(config.seed, "bound-init", i).generate_state(1)[0])
        init = init_params(config.model.kind, config.model.dims(ds_train.dim), seed=init_seed)
        params, _ = train(init, ds_train, scheme, loss, hyper)
        models.append(params)

    L = config.bound.L
    if L is None:
        L = float(np.linalg.norm(ds_eval.features, axis=1).max())
    inputs = BoundInputs(
        gamma=config.bound.gamma, delta=config.bound.delta,
        q=config.bound.q, L=L, n=ds_eval.n,
    )
    pair = class_density_pair(ds_train, weights, target=config.target,
                              clean_target=config.clean_target)
    report = evaluate_bound(models, ds_eval, pair, inputs, convention=config.convention)
    path = os.path.join(out_dir, "bound.json")
    save_bound_json(report, path)
    return [path]


def _run_check(config: CheckConfig, out_dir: str, jobs: int) -> list[str]:
    wanted = propcheck.CHECK_IDS if config.checks == "all" else tuple(config.checks)
    verdicts = propcheck.run_all_checks(config.seed, jobs=jobs, only=wanted)
    paths = []
    jsonl_path = os.path.join(out_dir, "verdicts.jsonl")
    propcheck.save_verdicts_jsonl(verdicts, jsonl_path)
    paths.append(jsonl_path)
    summary_path = os.path.join(out_dir, "summary.csv")
    propcheck.save_check_summary_csv(verdicts, summary_path)
    paths.append(summary_path)
    return paths


def _run_report(config: ReportConfig, out_dir: str, jobs: int) -> list[str]:
    if not os.path.isdir(config.inputs):
        raise FileNotFoundError(f"report inputs directory not found: {config.inputs}")
    return reporting.generate_report(config.inputs, out_dir)


_DISPATCH: dict[str, Callable] = {
    "gen": _run_gen,
    "train": _run_train,
    "difficulty": _run_difficulty,
    "bound": _run_bound,
    "check": _run_check,
    "report": _run_report,
}


def run(config: ExperimentConfig, out_dir: str, jobs: int = 1) -> RunManifest:
    """Run one experiment and return its manifest (also written to out_dir)."""
    if jobs < 1:
        raise SpecificationError("jobs must be >= 1")
    started = _utc_now()
    digest = config_digest(config.model_dump(mode="json"))
    os.makedirs(out_dir, exist_ok=True)
    paths = _DISPATCH[config.experiment](config, out_dir, jobs)
    records = [
        ArtifactRecord(path=os.path.relpath(p, out_dir), sha256=sha256_file(p))
        for p in paths
    ]
    manifest = RunManifest(
        schema_version=SCHEMA_VERSION,
        experiment=config.experiment,
        config_digest=digest,
        tool_version=__version__,
        started_at=started,
        finished_at=_utc_now(),
        out_dir=out_dir,
        artifacts=records,
    )
    write_json(os.path.join(out_dir, "manifest.json"), manifest.model_dump(mode="json"))
    return manifest
