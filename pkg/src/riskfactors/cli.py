"""Batch command-line frontend.

Pipeline: ingest -> diagnose -> cluster -> aggregate -> calibrate -> stress
-> report. Every command takes ``--config PATH`` plus optional ``--out DIR``
and ``--seed N`` overrides; every output file embeds the config hash and the
effective seed, and re-running a command with identical config and seed
reproduces byte-identical numeric payloads.

Exit codes: 0 on success, 2 for configuration/input errors, 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import cluster as clustermod
from . import factors as factorsmod
from . import nnet, panel, pca, stress
from ._util import fmt, write_csv
from .config import BumpScenarioConfig, EllipsoidScenarioConfig, RunConfig, \
    load_config
from .errors import ConfigError, InputError, NumericalError, RiskfactorsError


# ---------------------------------------------------------------- loading

def _load_factor_panel(cfg: RunConfig) -> panel.ReturnPanel:
    if not cfg.factor_panel.exists():
        raise ConfigError(f"factor panel {cfg.factor_panel} does not exist")
    categories = None
    if cfg.categories is not None:
        if not cfg.categories.exists():
            raise ConfigError(f"category file {cfg.categories} does not exist")
        categories = panel.load_categories(cfg.categories)
    loaded = panel.load_panel(cfg.factor_panel, categories=categories)
    if cfg.factor_input == "prices":
        loaded = panel.to_returns(loaded, cfg.returns_method)
    return loaded


def _load_asset_panel(cfg: RunConfig) -> panel.ReturnPanel:
    if cfg.asset_panel is None:
        raise ConfigError("no asset_panel configured")
    if not cfg.asset_panel.exists():
        raise ConfigError(f"asset panel {cfg.asset_panel} does not exist")
    loaded = panel.load_panel(cfg.asset_panel)
    if cfg.asset_input == "prices":
        loaded = panel.to_returns(loaded, cfg.returns_method)
    return loaded


def _assignment(cfg: RunConfig, std: panel.StandardizedPanel
                ) -> clustermod.ClusterAssignment:
    """Category sidecar wins; otherwise cut the Ward tree at K."""
    if std.categories is not None:
        return clustermod.ClusterAssignment.from_categories(std.categories,
                                                            std.labels)
    if not 1 <= cfg.k <= std.d:
        raise ConfigError(f"k={cfg.k} out of range for {std.d} columns")
    return clustermod.cut(clustermod.ward_cluster(std), cfg.k)


def _weights(cfg: RunConfig, asset_labels) -> np.ndarray | None:
    """Optional weight sidecar (label,weight); normalised. None means
    equally weighted."""
    if cfg.weights is None:
        return None
    if not cfg.weights.exists():
        raise ConfigError(f"weight file {cfg.weights} does not exist")
    table = panel.load_categories(cfg.weights)
    missing = [lab for lab in asset_labels if lab not in table]
    if missing:
        raise ConfigError(f"weight file lacks assets: {missing[:5]}")
    w = np.array([float(table[lab]) for lab in asset_labels])
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        raise ConfigError("weights must sum to a positive value")
    return w / total


def _write_json(cfg: RunConfig, name: str, payload: dict) -> None:
    path = cfg.out_dir / name
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"config": cfg.digest, "seed": cfg.seed, **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _factors_for_model(cfg: RunConfig, std: panel.StandardizedPanel
                       ) -> factorsmod.AggregatedFactors:
    """Factor series for the configured model kind, on the full history."""
    if cfg.model_kind == "pca":
        return factorsmod.global_pca_factors(std, cfg.k)
    assignment = _assignment(cfg, std)
    if cfg.model_kind == "clustered-pca":
        return factorsmod.clustered_pca_factors(std, assignment)
    model_path = cfg.out_dir / "clustered_ae.json"
    if not model_path.exists():
        raise InputError(f"missing model file {model_path}; run `aggregate` first")
    cae = nnet.load_model(model_path)
    return factorsmod.clustered_ae_factors(cae, std)


# ---------------------------------------------------------------- commands

def cmd_diagnose(cfg: RunConfig) -> None:
    """Per rolling window: eigenvalue shares, Kaiser-Guttman flags, IPR/PR,
    absolute-correlation heatmap data and category verdicts."""
    pan = _load_factor_panel(cfg)
    windows = panel.rolling_windows(pan, cfg.window)
    m = min(cfg.heatmap_pcs, pan.d)

    relevance_rows = []
    verdict_rows = []
    verdict_doc: dict[str, dict] = {}
    for end_date, win in windows:
        std = panel.standardize(win)
        model = pca.fit_pca(std)
        shares = model.eigenvalues / model.eigenvalues.sum()
        for k in range(1, model.d + 1):
            ipr, pr = pca.participation_ratio(model, k)
            relevance_rows.append((end_date.isoformat(), k,
                                   float(shares[k - 1]),
                                   int(shares[k - 1] > 1.0 / model.d),
                                   ipr, pr))
        corr = pca.factor_correlations(model, absolute=True)
        write_csv(cfg.out_dir / f"heatmap_{end_date.isoformat()}.csv",
                  ["label"] + [f"PC{i}" for i in range(1, m + 1)],
                  [(lab, *corr[j, :m]) for j, lab in enumerate(model.labels)],
                  comment=cfg.stamp)
        if pan.categories is not None:
            by_pc = {}
            for k in range(1, m + 1):
                verdicts = pca.classify_categories(model, k, pan.categories)
                by_pc[str(k)] = {cat: v.value for cat, v in sorted(verdicts.items())}
                for cat, v in sorted(verdicts.items()):
                    verdict_rows.append((end_date.isoformat(), k, cat, v.value))
            verdict_doc[end_date.isoformat()] = by_pc

    write_csv(cfg.out_dir / "pc_relevance.csv",
              ["date", "pc", "eigenvalue_share", "kaiser_guttman", "ipr", "pr"],
              relevance_rows, comment=cfg.stamp)
    if pan.categories is not None:
        write_csv(cfg.out_dir / "verdicts.csv",
                  ["date", "pc", "category", "verdict"], verdict_rows,
                  comment=cfg.stamp)
        _write_json(cfg, "verdicts.json", {"verdicts": verdict_doc})


def cmd_cluster(cfg: RunConfig) -> None:
    """Ward dendrogram of the panel columns and its K-cut."""
    pan = _load_factor_panel(cfg)
    std = panel.standardize(pan)
    dendrogram = clustermod.ward_cluster(std)
    write_csv(cfg.out_dir / "dendrogram.csv",
              ["left", "right", "height", "size"],
              [(mg.left, mg.right, mg.height, mg.size) for mg in dendrogram.merges],
              comment=cfg.stamp)
    if not 1 <= cfg.k <= std.d:
        raise ConfigError(f"k={cfg.k} out of range for {std.d} columns")
    assignment = clustermod.cut(dendrogram, cfg.k)
    write_csv(cfg.out_dir / "assignment.csv", ["label", "cluster"],
              [(lab, cid) for lab, cid in assignment.by_label.items()],
              comment=cfg.stamp)


def cmd_aggregate(cfg: RunConfig) -> None:
    """Aggregated factor series; for clustered-ae also the trained model and
    an MSE comparison table."""
    pan = _load_factor_panel(cfg)
    std = panel.standardize(pan)

    mse_rows = []
    if cfg.model_kind == "pca":
        factors = factorsmod.global_pca_factors(std, cfg.k)
        model = pca.fit_pca(std)
        _, k_mse = pca.reconstruct(model, cfg.k)
        mse_rows.append(("pca", f"first {cfg.k} PCs", "", "", k_mse))
    else:
        assignment = _assignment(cfg, std)
        write_csv(cfg.out_dir / "assignment.csv", ["label", "cluster"],
                  [(lab, cid) for lab, cid in assignment.by_label.items()],
                  comment=cfg.stamp)
        cpca = factorsmod.clustered_pca_factors(std, assignment)
        cpca_mse = factorsmod.clustered_pca_mse(std, assignment)
        mse_rows.append(("clustered-pca", "first PC per cluster", "", "", cpca_mse))
        if cfg.model_kind == "clustered-pca":
            factors = cpca
        else:
            spec = cfg.ae_spec
            result = nnet.fit_clustered_ae(std, assignment, cfg.train, spec)
            nnet.save_model(result.model, cfg.out_dir / "clustered_ae.json",
                            config=cfg.digest, seed=cfg.seed)
            spec_text = (f"enc: {spec.encoder_hidden} / {spec.encoder_activation.value}"
                         f"; dec: {spec.decoder_hidden} / {spec.decoder_activation.value}")
            mse_rows.append(("clustered-ae", spec_text, cfg.train.l2,
                             cfg.train.batch_size, result.full_mse))
            epoch_rows = [(stream, s.epoch, s.train_loss, s.train_mse,
                           "" if s.val_mse is None else s.val_mse)
                          for stream, log in sorted(result.logs.items())
                          for s in log]
            write_csv(cfg.out_dir / "epochs.csv",
                      ["stream", "epoch", "train_loss", "train_mse", "val_mse"],
                      epoch_rows, comment=cfg.stamp)
            factors = factorsmod.clustered_ae_factors(result.model, std)

    write_csv(cfg.out_dir / "factors.csv", ["date", *factors.labels],
              [(date.isoformat(), *row)
               for date, row in zip(factors.dates, factors.series)],
              comment=cfg.stamp)
    _write_json(cfg, "factors_meta.json", {
        "labels": list(factors.labels),
        "provenance": factors.provenance,
        "mean": [float(v) for v in factors.mean],
        "std": [float(v) for v in factors.std],
    })
    write_csv(cfg.out_dir / "mse_table.csv",
              ["model", "specification", "l2", "batch_size", "mse"],
              mse_rows, comment=cfg.stamp)


def _calibrated_model(cfg: RunConfig) -> tuple[factorsmod.FactorModel,
                                               factorsmod.AggregatedFactors,
                                               panel.ReturnPanel]:
    """Factor model fitted on the trailing calibration window of dates the
    asset and factor panels share. Factor statistics keep the full history."""
    fpan = _load_factor_panel(cfg)
    std = panel.standardize(fpan)
    factors = _factors_for_model(cfg, std)
    assets = _load_asset_panel(cfg)
    common = [d for d in assets.dates if d in set(factors.dates)]
    if len(common) <= factors.k + 1:
        raise InputError(f"only {len(common)} overlapping dates between asset "
                         "and factor panels")
    window = common[-cfg.calibration_window:]
    asset_rows = [assets.dates.index(d) for d in window]
    sub_assets = panel.ReturnPanel(tuple(window), assets.labels,
                                   np.array(assets.values[asset_rows]),
                                   assets.categories)
    sub_factors = factors.select_dates(window)
    model = factorsmod.fit_factor_model(sub_assets, sub_factors)
    return model, factors, sub_assets


def _model_to_doc(model: factorsmod.FactorModel) -> dict:
    return {
        "asset_labels": list(model.asset_labels),
        "alphas": [float(v) for v in model.alphas],
        "betas": [[float(v) for v in row] for row in model.betas],
        "residual_variances": [float(v) for v in model.residual_variances],
        "factor_labels": list(model.factor_labels),
        "factor_means": [float(v) for v in model.factor_means],
        "factor_cov": [[float(v) for v in row] for row in model.factor_cov],
        "factor_std": [float(v) for v in model.factor_std],
        "provenance": model.provenance,
    }


def _model_from_doc(doc: dict) -> factorsmod.FactorModel:
    return factorsmod.FactorModel(
        tuple(doc["asset_labels"]), np.array(doc["alphas"]),
        np.array(doc["betas"]), np.array(doc["residual_variances"]),
        tuple(doc["factor_labels"]), np.array(doc["factor_means"]),
        np.array(doc["factor_cov"]), np.array(doc["factor_std"]),
        doc.get("provenance", ""))


def cmd_calibrate(cfg: RunConfig) -> None:
    """Fit the per-asset factor model and write it as JSON."""
    model, _, _ = _calibrated_model(cfg)
    _write_json(cfg, "factor_model.json", _model_to_doc(model))


def cmd_stress(cfg: RunConfig) -> None:
    """Evaluate every configured scenario; JSON + sorted per-asset CSV per
    scenario plus a summary table."""
    summary_header = ["scenario", "model", "propagation", "portfolio_impact",
                      "binding"]
    if not cfg.scenarios:
        write_csv(cfg.out_dir / "summary.csv", summary_header, [],
                  comment=cfg.stamp)
        return

    if cfg.asset_panel is not None:
        model, factors, _ = _calibrated_model(cfg)
    else:
        model_path = cfg.out_dir / "factor_model.json"
        if not model_path.exists():
            raise InputError(f"missing model file {model_path}; configure an "
                             "asset panel or run `calibrate` first")
        model = _model_from_doc(json.loads(model_path.read_text()))
        fpan = _load_factor_panel(cfg)
        factors = _factors_for_model(cfg, panel.standardize(fpan))

    weights = _weights(cfg, model.asset_labels)
    needs_ae = any(isinstance(s, BumpScenarioConfig)
                   and s.propagation is stress.Propagation.AE_DECODER
                   for s in cfg.scenarios)
    cae = std_full = None
    if needs_ae:
        model_path = cfg.out_dir / "clustered_ae.json"
        if not model_path.exists():
            raise InputError(f"missing model file {model_path}; run `aggregate` "
                             "with model kind clustered-ae first")
        cae = nnet.load_model(model_path)
        std_full = panel.standardize(_load_factor_panel(cfg))

    summary_rows = []
    for sc in cfg.scenarios:
        if isinstance(sc, EllipsoidScenarioConfig):
            result, extra = _run_ellipsoid(cfg, model, factors, sc, weights)
        else:
            result, extra = _run_bump(cfg, model, factors, sc, weights,
                                      cae, std_full)
        order = np.argsort(result.per_asset_impact, kind="stable")
        write_csv(cfg.out_dir / f"scenario_{sc.name}_impacts.csv",
                  ["label", "impact"],
                  [(model.asset_labels[i], float(result.per_asset_impact[i]))
                   for i in order],
                  comment=cfg.stamp)
        payload = {
            "name": sc.name,
            "propagation": result.scenario.propagation.value,
            "model": cfg.model_kind,
            "factor_labels": list(model.factor_labels),
            "factor_vector": [float(v) for v in result.factor_vector],
            "portfolio_impact": result.portfolio_impact,
            "tail_frequencies": {
                lab: {"fraction": frac,
                      "days_per_year": stress.tail_days_per_year(frac)}
                for lab, frac in sorted(result.tail_frequencies.items())},
            **extra,
        }
        _write_json(cfg, f"scenario_{sc.name}.json", payload)
        summary_rows.append((sc.name, cfg.model_kind,
                             result.scenario.propagation.value,
                             result.portfolio_impact,
                             extra.get("binding", "")))
    write_csv(cfg.out_dir / "summary.csv", summary_header, summary_rows,
              comment=cfg.stamp)


def _run_bump(cfg, model, factors, sc: BumpScenarioConfig, weights, cae, std_full):
    scenario = stress.StressScenario(sc.name, sc.core_labels, sc.shifts,
                                     sc.propagation)
    result = stress.evaluate_scenario(model, scenario, factors, weights,
                                      cae=cae, panel=std_full, config=cfg.train)
    extra = {"core_labels": list(sc.core_labels),
             "shifts_sd": [float(s) for s in sc.shifts]}
    return result, extra


def _run_ellipsoid(cfg, model, factors, sc: EllipsoidScenarioConfig, weights):
    es = stress.worst_case_ellipsoid(model, sc.factor_labels, sc.radius, weights)
    vector = stress.ellipsoid_vector(model, es, sc.propagation)
    impact = stress.portfolio_impact(model, vector, weights)
    tails = {}
    shifts = []
    for i, lab in enumerate(sc.factor_labels):
        pos = factors.labels.index(lab)
        # how extreme the solution is relative to the factor's full history
        shift = float((es.solution[i] - factors.mean[pos]) / factors.std[pos])
        shifts.append(shift)
        tails[lab] = stress.tail_frequency(factors.series[:, pos], shift,
                                           mean=factors.mean[pos],
                                           std=factors.std[pos])
    scenario = stress.StressScenario(sc.name, sc.factor_labels,
                                     tuple(shifts), sc.propagation)
    result = stress.ScenarioResult(scenario, vector, impact.per_asset,
                                   impact.portfolio, tails)
    extra = {"kind": "ellipsoid",
             "radius": es.radius,
             "binding": bool(es.binding),
             "solution": [float(v) for v in es.solution],
             "solution_shifts_sd": [float(s) for s in shifts]}
    return result, extra


def cmd_report(cfg: RunConfig) -> None:
    """Collect the run's artifacts into one machine- and human-readable
    summary."""
    out = cfg.out_dir
    if not out.exists():
        raise InputError(f"output directory {out} does not exist; run the "
                         "pipeline commands first")
    artifacts = sorted(p.name for p in out.iterdir()
                       if p.is_file() and p.name not in ("report.json", "report.md"))
    doc: dict = {"artifacts": artifacts}
    lines = ["# Run report", "", f"- config: `{cfg.digest}`",
             f"- seed: {cfg.seed}", f"- model: {cfg.model_kind}", ""]

    from ._util import read_csv_rows
    if (out / "mse_table.csv").exists():
        header, rows = read_csv_rows(out / "mse_table.csv")
        doc["mse_table"] = [dict(zip(header, row)) for row in rows]
        lines += ["## Model MSEs", "", "| " + " | ".join(header) + " |",
                  "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        lines.append("")
    if (out / "summary.csv").exists():
        header, rows = read_csv_rows(out / "summary.csv")
        doc["stress_summary"] = [dict(zip(header, row)) for row in rows]
        lines += ["## Stress scenarios", "", "| " + " | ".join(header) + " |",
                  "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        lines.append("")
    if (out / "pc_relevance.csv").exists():
        header, rows = read_csv_rows(out / "pc_relevance.csv")
        dates = sorted({row[0] for row in rows})
        kg = {date: sum(int(row[3]) for row in rows if row[0] == date)
              for date in dates}
        doc["kaiser_guttman_counts"] = kg
        lines += ["## Kaiser-Guttman counts per window", ""]
        lines += [f"- {date}: {count}" for date, count in kg.items()]
        lines.append("")

    _write_json(cfg, "report.json", doc)
    text = [f"<!-- {cfg.stamp} -->"] + lines
    (out / "report.md").write_text("\n".join(text) + "\n")


COMMANDS = {
    "diagnose": cmd_diagnose,
    "cluster": cmd_cluster,
    "aggregate": cmd_aggregate,
    "calibrate": cmd_calibrate,
    "stress": cmd_stress,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="riskfactors",
        description="Aggregate observable risk factors into interpretable "
                    "latent factors and evaluate portfolio stress scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").split("\n")[0])
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="seed (overrides config)")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, out_override=args.out,
                          seed_override=args.seed)
        COMMANDS[args.command](cfg)
    except NumericalError as exc:
        print(f"riskfactors {args.command}: numerical failure: {exc}",
              file=sys.stderr)
        return 3
    except InputError as exc:
        print(f"riskfactors {args.command}: {exc}", file=sys.stderr)
        return 2
    except RiskfactorsError as exc:
        print(f"riskfactors {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
