"""Command-line front end: ``soilnpk {gen,featurize,train,eval,predict,convert}``.

Exit status: 0 success, 1 data or validation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import agronomy, curves, dataset, evaluation, phantom, pipeline, svgplot
from .errors import SoilNPKError, ValidationError
from .kvconfig import read_kv
from .models import DEFAULT_MODELS, MODEL_KINDS, ForestConfig, MlpConfig, default_config

DEFAULT_SEED = 0


class UsageError(Exception):
    pass


def _log(msg):
    print(msg, file=sys.stderr)


def _ion_model(args):
    return phantom.IonModel.from_file(args.ion_model) if args.ion_model else phantom.IonModel()


def _geometry(args):
    return curves.CellGeometry(args.separation, args.area)


def _model_config(kind, args):
    cfg = default_config(kind)
    if isinstance(cfg, MlpConfig) and getattr(args, "epochs", None) is not None:
        cfg = MlpConfig(**{**cfg.__dict__, "epochs": args.epochs})
    if isinstance(cfg, ForestConfig) and getattr(args, "n_trees", None) is not None:
        cfg = ForestConfig(**{**cfg.__dict__, "n_trees": args.n_trees})
    return cfg


def _parse_models(text):
    if text == "all":
        return list(DEFAULT_MODELS)
    kinds = [k.strip() for k in text.split(",") if k.strip()]
    bad = [k for k in kinds if k not in MODEL_KINDS]
    if bad or not kinds:
        raise argparse.ArgumentTypeError(
            f"invalid model name(s) {', '.join(bad) or text!r}; choose from all, {', '.join(MODEL_KINDS)}")
    return kinds


def _writable(path):
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        raise ValidationError(f"output directory {parent} does not exist")
    return path


# ---------------------------------------------------------------- gen


def cmd_gen(args):
    out = _writable(args.output)
    stocks = (phantom.StockSolution("HNO3", args.hno3_molarity),
              phantom.StockSolution("H3PO4", args.h3po4_molarity),
              phantom.StockSolution("KOH", args.koh_molarity))
    ions, geometry = _ion_model(args), _geometry(args)
    table = phantom.generate_dataset(stocks, ions, geometry, args.noise, args.seed, args.step, args.total)
    dataset.write_table(table, out)
    print(f"# seed={args.seed} noise_sd={args.noise} step_mL={args.step} total_mL={args.total}")
    print(f"wrote {len(table)} rows to {out}")
    for name, col in zip(table.feature_names, table.X.T):
        print(f"  {name}: {col.min():.6g} .. {col.max():.6g}")
    if args.sweeps_dir:
        sweep_dir = Path(args.sweeps_dir)
        sweep_dir.mkdir(parents=True, exist_ok=True)
        n = 0
        for curve in phantom.generate_sweeps(stocks, ions, geometry, args.noise, args.seed, args.step, args.total):
            (sweep_dir / phantom.curve_filename(curve)).write_text(curves.format_curve(curve))
            n += 1
        print(f"wrote {n} sweep files to {sweep_dir}")
    if args.correlations:
        corr = dataset.spearman_matrix(table)
        Path(args.correlations).write_text(dataset.correlation_csv(corr, table.columns))
        print(f"wrote Spearman matrix to {args.correlations}")
    return 0


# ---------------------------------------------------------------- featurize


def _read_mapping(path, columns):
    rows = list(csv.DictReader(io.StringIO(Path(path).read_text())))
    out = {}
    for row in rows:
        try:
            out[row["sample_id"].strip()] = tuple(float(row[c]) for c in columns)
        except (KeyError, ValueError):
            raise ValidationError(f"{path}: needs columns sample_id,{','.join(columns)}") from None
    return out


def cmd_featurize(args):
    out = _writable(args.output)
    src = Path(args.directory)
    if not src.is_dir():
        raise ValidationError(f"{src} is not a directory")
    files = sorted(p for p in src.iterdir() if p.suffix.lower() == ".csv" and p.is_file())
    ph_map = _read_mapping(args.ph_file, ("ph",)) if args.ph_file else {}
    lab_map = _read_mapping(args.lab_file, agronomy.LAB_COLUMNS) if args.lab_file else {}
    geometry = _geometry(args)
    scale = 1e-3 if args.milliamps else 1.0
    rows, errors = [], []
    for path in files:
        try:
            curve = curves.parse_curve_file(path, current_scale=scale)
            p_av, sigma = curves.extract_features(curve, geometry)
            if args.as_dataset:
                if curve.label is None:
                    raise ValidationError(f"{path.name}: filename carries no <N>-<P>-<K>-<pH> label")
                rows.append((curve.label.ph, sigma, p_av, *curve.label.composition.as_tuple()))
            else:
                if path.stem in ph_map:
                    ph = ph_map[path.stem][0]
                elif curve.label is not None:
                    ph = curve.label.ph
                else:
                    raise ValidationError(f"{path.name}: no pH in filename or --ph-file")
                rows.append(agronomy.SoilSample(path.stem, ph, sigma, p_av, *lab_map.get(path.stem, (None, None))))
        except (SoilNPKError, OSError) as exc:
            errors.append(str(exc))
    if args.as_dataset:
        text = ",".join(dataset.FEATURE_NAMES + dataset.TARGET_NAMES) + "\n" + "".join(
            ",".join(repr(float(v)) for v in r) + "\n" for r in rows)
    else:
        text = agronomy.soil_samples_csv(rows, with_lab=bool(lab_map))
    out.write_text(text)
    if not files:
        _log(f"warning: no .csv files in {src}")
    print(f"wrote {len(rows)} rows to {out}")
    for e in errors:
        _log(f"error: {e}")
    return 1 if errors else 0


# ---------------------------------------------------------------- train / eval


def _load_table(args):
    if args.data:
        return dataset.read_table(args.data)
    return phantom.generate_dataset(noise_sd=args.noise, seed=args.seed)


def cmd_train(args):
    out = _writable(args.output)
    table = _load_table(args)
    cfg = _model_config(args.model, args)
    pipe = pipeline.fit_pipeline(args.model, table.X, table.Y, args.preprocessing, cfg, args.seed)
    pipeline.save(pipe, out)
    print(f"# seed={args.seed} model={args.model} preprocessing={args.preprocessing}")
    print(f"train MAE {evaluation.mae(table.Y, pipe.predict(table.X)):.4f} on {len(table)} rows; saved {out}")
    return 0


def cmd_eval(args):
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    table = _load_table(args)
    plan = dataset.make_kfold(len(table), args.k, args.seed)
    preps = ("raw", "pca") if args.preprocessing == "both" else (args.preprocessing,)
    print(f"# seed={args.seed} k={args.k} rows={len(table)} models={','.join(args.models)}")
    results = []
    for kind in args.models:
        for prep in preps:
            try:
                fold_results = evaluation.run_cv(table, kind, prep, plan, args.seed, _model_config(kind, args))
            except SoilNPKError as exc:
                raise type(exc)(f"{kind}/{prep}: {exc}") from exc
            results.extend(fold_results)
            for r in fold_results:
                if r.train_curve is not None and len(r.train_curve):
                    curve_dir = outdir / "curves"
                    curve_dir.mkdir(exist_ok=True)
                    stem = f"{kind}_{prep}_fold{r.fold + 1}"
                    (curve_dir / f"{stem}.csv").write_text(evaluation.epoch_curve_csv(r))
                    (curve_dir / f"{stem}.svg").write_text(svgplot.line_plot(
                        {"train": r.train_curve, "validation": r.val_curve}, title=f"{kind} {prep} fold {r.fold + 1}"))
    report = evaluation.compare_models(results)
    (outdir / "report.csv").write_text(report.to_csv())
    (outdir / "folds.csv").write_text(evaluation.folds_csv(results))
    groups = [f"{s.model}/{s.preprocessing}" for s in report.summaries]
    (outdir / "comparison.svg").write_text(svgplot.bar_chart(
        groups, ["train", "test"],
        [[s.train_mean, s.test_mean] for s in report.summaries],
        [[s.train_sd, s.test_sd] for s in report.summaries], title="Mean MAE across folds"))
    for s in report.summaries:
        r2 = f"  R2 {s.r2_mean:.3f}" if s.r2_mean is not None and s.model == "linear" else ""
        print(f"{s.model:>10} {s.preprocessing:<4} train {s.train_mean:8.3f} ± {s.train_sd:.3f}"
              f"  test {s.test_mean:8.3f} ± {s.test_sd:.3f}{r2}")
    print("ranking: " + ", ".join(f"{m}/{p}" for m, p in report.ranking))
    return 0


# ---------------------------------------------------------------- predict


def _comparison_csv(samples, preds):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample_id", "lab_p2o5_kg_ha", "lab_k2o_kg_ha", "pred_p2o5_kg_ha", "pred_k2o_kg_ha"])
    for s, p in zip(samples, preds):
        w.writerow([s.sample_id, "" if s.lab_p2o5 is None else f"{s.lab_p2o5:g}",
                    "" if s.lab_k2o is None else f"{s.lab_k2o:g}", f"{p['P2O5']:.4f}", f"{p['K2O']:.4f}"])
    return buf, w


def cmd_predict(args):
    out = _writable(args.output)
    pipe = pipeline.load(args.model)
    samples = agronomy.read_soil_samples(args.samples)
    name = args.model_name or pipe.kind
    constants = agronomy.ConversionConstants(args.density, args.depth)
    if args.calibration:
        calib = agronomy.CalibrationSet.from_file(args.calibration)
        eval_samples = samples[args.calibrate_first or 0:]
    elif samples and all(s.has_lab for s in samples):
        n_cal = args.calibrate_first or 5
        raw = agronomy.predict_soil(pipe, samples, agronomy.identity_calibration(name), constants, name)
        calib = agronomy.calibrate(raw, samples, name, n_cal, args.ratio_of_means)
        eval_samples = samples[n_cal:]
        if args.save_calibration:
            Path(args.save_calibration).write_text(calib.to_text())
    else:
        raise ValidationError("no calibration file given and the samples lack lab columns; "
                              "pass --calibration FILE or add lab_p2o5_kg_ha,lab_k2o_kg_ha columns")
    preds = agronomy.predict_soil(pipe, eval_samples, calib, constants, name)
    buf, w = _comparison_csv(eval_samples, preds)
    print(f"# model={name} samples={len(samples)} evaluated={len(eval_samples)}")
    for compound in agronomy.NUTRIENTS:
        print(f"  factor {name}.{compound.lower()} = {calib.factor(name, compound):.6g}")
    with_lab = [i for i, s in enumerate(eval_samples) if s.has_lab]
    if with_lab:
        errs = {}
        for compound, (oxide, _) in agronomy.NUTRIENTS.items():
            errs[oxide] = agronomy.percentage_error([preds[i][oxide] for i in with_lab],
                                                    [eval_samples[i].lab(compound) for i in with_lab],
                                                    args.error_denominator)
        w.writerow(["percentage_error", "", "", f"{errs['P2O5']:.4f}", f"{errs['K2O']:.4f}"])
        print(f"percentage error: P2O5 {errs['P2O5']:.2f}%  K2O {errs['K2O']:.2f}%")
    out.write_text(buf.getvalue())
    print(f"wrote {len(eval_samples)} rows to {out}")
    return 0


# ---------------------------------------------------------------- convert


def cmd_convert(args):
    constants = agronomy.ConversionConstants(args.density, args.depth)
    conc = args.mmol * args.factor
    print(f"# density={args.density} g/cm3 depth={args.depth} m -> {constants.ppm_factor():g} kg/ha per mg/L")
    if args.compound == "HNO3":
        ppm = agronomy.mmol_to_ppm(conc, constants.molar_mass["HNO3"])
        print(f"HNO3 {conc:g} mmol/L = {ppm:g} mg/L = {agronomy.ppm_to_kg_per_ha(ppm, constants):g} kg/ha")
        return 0
    oxide = agronomy.OXIDE_OF[args.compound]
    ox = agronomy.compound_to_oxide(conc, args.compound)
    ppm = agronomy.mmol_to_ppm(ox, constants.molar_mass[oxide])
    print(f"{args.compound} {conc:g} mmol/L -> {oxide} {ox:g} mmol/L = {ppm:g} mg/L"
          f" = {agronomy.ppm_to_kg_per_ha(ppm, constants):g} kg/ha")
    return 0


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser():
    parser = _Parser(prog="soilnpk", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key = value file with defaults for the subcommand's options")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common_cell(p):
        p.add_argument("--separation", type=float, default=0.045, help="electrode separation l in m")
        p.add_argument("--area", type=float, default=1.26e-4, help="electrode area A in m^2")

    def common_units(p):
        p.add_argument("--density", type=float, default=1.5, help="soil bulk density, g/cm^3")
        p.add_argument("--depth", type=float, default=0.15, help="soil depth, m")

    p = sub.add_parser("gen", help="generate the phantom dataset")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--noise", type=float, default=0.01, help="relative SD of current noise")
    p.add_argument("--step", type=float, default=2.0, help="mixing increment, mL")
    p.add_argument("--total", type=float, default=40.0, help="final volume, mL")
    p.add_argument("--hno3-molarity", type=float, default=0.08)
    p.add_argument("--h3po4-molarity", type=float, default=0.005)
    p.add_argument("--koh-molarity", type=float, default=0.535)
    p.add_argument("--ion-model", help="key = value overrides for IonModel")
    p.add_argument("--sweeps-dir", help="also write one V-I CSV per mixture here")
    p.add_argument("--correlations", help="write the Spearman matrix CSV here")
    common_cell(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("featurize", help="V-I CSV directory -> feature CSV")
    p.add_argument("directory")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--milliamps", action="store_true", help="currents in the files are mA")
    p.add_argument("--as-dataset", action="store_true", help="emit the dataset schema using filename labels")
    p.add_argument("--ph-file", help="CSV sample_id,ph for unlabeled sweeps")
    p.add_argument("--lab-file", help="CSV sample_id,lab_p2o5_kg_ha,lab_k2o_kg_ha to merge")
    common_cell(p)
    p.set_defaults(func=cmd_featurize)

    def common_train(p):
        p.add_argument("--data", help="dataset CSV (default: generate the phantom table)")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--noise", type=float, default=0.01, help="noise used when generating the table")
        p.add_argument("--epochs", type=int, help="override MLP epochs")
        p.add_argument("--n-trees", type=int, help="override forest size")

    p = sub.add_parser("train", help="fit one model on the whole table and save it")
    common_train(p)
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument("--preprocessing", choices=pipeline.PREPROCESSING, default="raw")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="k-fold comparison of models")
    common_train(p)
    p.add_argument("--models", type=_parse_models, default=list(DEFAULT_MODELS),
                   help="'all' or a comma list of " + ", ".join(MODEL_KINDS))
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--preprocessing", choices=("raw", "pca", "both"), default="both")
    p.add_argument("-o", "--output", default="eval_out", help="output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="soil samples -> K2O / P2O5 in kg/ha")
    p.add_argument("--model", required=True, help="model file from 'train'")
    p.add_argument("--samples", required=True, help="soil-sample CSV")
    p.add_argument("--calibration", help="key = value scaling factors (model.compound = factor)")
    p.add_argument("--calibrate-first", type=int, help="samples used for calibration (default 5)")
    p.add_argument("--ratio-of-means", action="store_true", help="calibrate with sum(lab)/sum(pred)")
    p.add_argument("--model-name", help="calibration key prefix (default: model kind)")
    p.add_argument("--save-calibration", help="write derived factors here")
    p.add_argument("--error-denominator", choices=("lab", "prediction"), default="lab",
                   help="divide absolute errors by lab values (MAPE) or by predictions")
    p.add_argument("-o", "--output", required=True)
    common_units(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("convert", help="unit chain calculator")
    p.add_argument("--compound", choices=("KOH", "H3PO4", "HNO3"), required=True)
    p.add_argument("--mmol", type=float, required=True, help="concentration, mmol/L")
    p.add_argument("--factor", type=float, default=1.0, help="scaling factor")
    common_units(p)
    p.set_defaults(func=cmd_convert)
    return parser


def _apply_config(parser, argv):
    """Load ``--config`` values as defaults for the chosen subcommand."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_kv(known.config)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in subparsers.choices.values():
        dests = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, raw in values.items():
            dest = key.replace("-", "_")
            action = dests.get(dest)
            if action is None:
                continue
            if isinstance(action, argparse._StoreTrueAction):
                defaults[dest] = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                defaults[dest] = action.type(raw)
            else:
                defaults[dest] = raw
        sp.set_defaults(**defaults)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        _log(str(exc))
        return 2
    except (SoilNPKError, OSError, argparse.ArgumentTypeError, ValueError) as exc:
        _log(f"error: {exc}")
        return 2
    try:
        return args.func(args)
    except (SoilNPKError, OSError) as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
