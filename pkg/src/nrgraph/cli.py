"""Command-line interface: generate, fit, gof, communities, summarize.

Every option can also come from a ``key = value`` config file passed with
``--config``; flags given on the command line win. Outputs carry no
timestamps so reruns with the same seed and config are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import chain_seeds, check_labels
from .diagnostics import ccdf_bands, clustering_accuracy, degree_table, goodness_of_fit, posterior_predictive_degrees
from .estimators import summarize_chains
from .graph import EdgeListError, degree_histogram, read_edge_list, write_edge_list
from .hmc import HmcConfig
from .mcmc_rank1 import ChainError, Schedule, run_chain_rank1
from .mcmc_rankc import RankCConfig, assign_communities, run_chain_rankc
from .models import GIG, InverseGamma
from .sampler import sample_prior_graph

log = logging.getLogger("nrgraph")

DEFAULTS = {
    "generate": {"model": "ig", "alpha": 1.5, "beta": 3.0, "nu": -0.5, "a": 0.1, "b": 3.0,
                 "n": 10_000, "c": None, "gamma": None, "seed": 0, "output": None},
    "fit": {"graph": None, "model": "ig", "c": None, "iters": 10_000, "burn_in": 5_000, "thin": 10,
            "chains": 3, "seed": 0, "step_size": 1e-2, "leapfrog_steps": 20, "init_iters": 1000,
            "init_step_size": 1e-1, "w_step_size": 5e-3, "v_step_size": 2.5e-2,
            "v_step_size_after_burn_in": 5e-3, "jobs": 1, "out_dir": None},
    "gof": {"graph": None, "fit_dir": None, "n": None, "seed": 0, "out_dir": None},
    "communities": {"fit_dir": None, "graph": None, "truth": None, "out_dir": None},
    "summarize": {"fit_dir": None},
}


class CliError(Exception):
    """Failure that should end the run with a message and exit code 1."""


def _float_list(text):
    return [float(x) for x in str(text).replace(",", " ").split()]


def _add_common(p, cmd):
    p.add_argument("--config", help="key = value file; command-line flags override it")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    if cmd in ("generate", "fit", "gof"):
        p.add_argument("--seed", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="nrgraph", description="Norros-Reittu random graph toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a graph from the prior")
    _add_common(p, "generate")
    p.add_argument("--model", choices=["ig", "gig"])
    for name in ("alpha", "beta", "nu", "a", "b"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--c", type=int, help="number of communities (rank-c model)")
    p.add_argument("--gamma", type=_float_list, help="Dirichlet concentration, one value or c values")
    p.add_argument("-o", "--output", help="edge-list path; companion files share its stem")

    p = sub.add_parser("fit", help="run MCMC chains on an edge list")
    _add_common(p, "fit")
    p.add_argument("--graph")
    p.add_argument("--model", choices=["ig", "gig"])
    p.add_argument("--c", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--step-size", dest="step_size", type=float)
    p.add_argument("--leapfrog-steps", dest="leapfrog_steps", type=int)
    p.add_argument("--init-iters", dest="init_iters", type=int)
    p.add_argument("--init-step-size", dest="init_step_size", type=float)
    p.add_argument("--w-step-size", dest="w_step_size", type=float)
    p.add_argument("--v-step-size", dest="v_step_size", type=float)
    p.add_argument("--v-step-size-after-burn-in", dest="v_step_size_after_burn_in", type=float)
    p.add_argument("--jobs", type=int, help="parallel chain workers (outputs do not depend on it)")
    p.add_argument("--out-dir", dest="out_dir")

    p = sub.add_parser("gof", help="posterior-predictive degree check")
    _add_common(p, "gof")
    p.add_argument("--graph", help="defaults to the graph recorded in the fit config")
    p.add_argument("--fit-dir", dest="fit_dir")
    p.add_argument("--n", type=int, help="predictive graph size (default: observed n)")
    p.add_argument("--out-dir", dest="out_dir", help="defaults to the fit directory")

    p = sub.add_parser("communities", help="community assignments from a rank-c fit")
    _add_common(p, "communities")
    p.add_argument("--fit-dir", dest="fit_dir")
    p.add_argument("--graph", help="defaults to the graph recorded in the fit config")
    p.add_argument("--truth", help="ground-truth labels, one integer per line in node order")
    p.add_argument("--out-dir", dest="out_dir", help="defaults to the fit directory")

    p = sub.add_parser("summarize", help="print a fit summary")
    _add_common(p, "summarize")
    p.add_argument("--fit-dir", dest="fit_dir")
    return parser


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys may use dashes."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve_config(parser, args):
    """Merge defaults, config-file values and explicit flags (in that order)."""
    cmd = args.command
    config = dict(DEFAULTS[cmd])
    if args.config:
        file_values = read_config_file(args.config)
        unknown = sorted(set(file_values) - set(config))
        if unknown:
            raise CliError(f"unknown config keys for {cmd}: {', '.join(unknown)}")
        argv = [cmd]
        for key, value in file_values.items():
            argv += [_flag_for(parser, cmd, key), value]
        parsed = parser.parse_args(argv)
        config.update({k: getattr(parsed, k) for k in file_values})
    config.update({k: v for k, v in vars(args).items() if k in config and v is not None})
    return config


def _flag_for(parser, cmd, dest):
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[cmd]
    for action in sub._actions:
        if action.dest == dest and action.option_strings:
            return next(s for s in action.option_strings if s.startswith("--"))
    raise CliError(f"no option for config key {dest!r}")


def _dump_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _all_finite(obj):
    if isinstance(obj, float):
        return math.isfinite(obj)
    if isinstance(obj, dict):
        return all(_all_finite(v) for v in obj.values())
    if isinstance(obj, (list, tuple)):
        return all(_all_finite(v) for v in obj)
    return True


def _require(config, *keys):
    missing = [k for k in keys if config.get(k) in (None, "")]
    if missing:
        raise CliError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _prior_from_config(config):
    try:
        if config["model"] == "ig":
            return InverseGamma(config["alpha"], config["beta"])
        return GIG(config["nu"], config["a"], config["b"])
    except ValueError as exc:
        raise CliError(f"invalid hyperparameters: {exc}") from exc


def _gamma_from_config(config):
    c = config["c"]
    gamma = config["gamma"]
    if c is None:
        if gamma is not None:
            raise CliError("--gamma needs --c")
        return None
    if c < 1:
        raise CliError("--c must be at least 1")
    gamma = [1.0] if gamma is None else list(gamma)
    if len(gamma) == 1:
        gamma = gamma * c
    if len(gamma) != c or any(not x > 0 for x in gamma):
        raise CliError(f"--gamma needs 1 or {c} positive values")
    return gamma


def cmd_generate(config):
    _require(config, "output")
    if config["n"] < 0:
        raise CliError("--n must be non-negative")
    prior = _prior_from_config(config)
    gamma = _gamma_from_config(config)
    rng = np.random.default_rng(config["seed"])
    g, latents = sample_prior_graph(config["n"], prior, rng, gamma=gamma)

    out = Path(config["output"])
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("")
    write_edge_list(g, out)
    header = ["node", "w"]
    cols = [latents["w"]]
    if "V" in latents:
        header += [f"v{q}" for q in range(latents["V"].shape[1])]
        cols += list(latents["V"].T)
    _write_csv(f"{stem}.latent.csv", header,
               ([i] + [float(col[i]) for col in cols] for i in range(g.n)))
    _write_csv(f"{stem}.degrees.csv", ["degree", "empirical_ccdf", "theoretical_pmf"], degree_table(g, prior))
    _dump_json({"command": "generate", **config, "gamma": gamma}, f"{stem}.config.json")
    log.info("wrote %s: n=%d, |E|=%d", out, g.n, g.n_edges)
    return [str(out)]


def _load_graph(path):
    try:
        return read_edge_list(path)
    except OSError as exc:
        raise CliError(f"cannot read graph {path}: {exc}") from exc
    except EdgeListError as exc:
        raise CliError(f"{path}: {exc}") from exc


def cmd_fit(config):
    _require(config, "graph", "out_dir")
    g = _load_graph(config["graph"])
    try:
        schedule = Schedule(config["iters"], config["burn_in"], config["thin"])
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    if schedule.n_retained == 0:
        raise CliError(f"schedule iters={schedule.iters}, burn_in={schedule.burn_in}, thin={schedule.thin} "
                       "retains no samples")
    if config["chains"] < 1:
        raise CliError("--chains must be at least 1")
    if g.n_edges == 0:
        raise CliError(f"{config['graph']} has no edges; nothing to fit")

    c = config["c"]
    try:
        if c is None:
            cfg = HmcConfig(config["step_size"], config["leapfrog_steps"])

            def one(seed):
                return run_chain_rank1(g, config["model"], schedule, cfg, np.random.default_rng(seed))
        else:
            if c < 1:
                raise CliError("--c must be at least 1")
            L = config["leapfrog_steps"]
            rc = RankCConfig(config["init_iters"], HmcConfig(config["init_step_size"], L),
                             HmcConfig(config["w_step_size"], L), HmcConfig(config["v_step_size"], L),
                             HmcConfig(config["v_step_size_after_burn_in"], L))

            def one(seed):
                return run_chain_rankc(g, config["model"], c, schedule, np.random.default_rng(seed), rc)
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    seeds = chain_seeds(config["seed"], config["chains"])
    chains = []
    if config["jobs"] > 1:
        from joblib import Parallel, delayed
        try:
            chains = Parallel(n_jobs=config["jobs"])(delayed(one)(s) for s in seeds)
        except ChainError as exc:
            raise CliError(f"chain failed: {exc}") from exc
    else:
        for k, seed in enumerate(seeds):
            try:
                chains.append(one(seed))
            except ChainError as exc:
                raise CliError(f"chain {k} failed at {exc}") from exc

    out = Path(config["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for k, chain in enumerate(chains):
        path = out / f"chain_{k}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for rec in chain.records():
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        written.append(str(path))
    summary = summarize_chains(chains)
    summary.update({"model": config["model"], "c": c, "n": g.n, "n_edges": g.n_edges})
    if c is not None:
        best = max(chains, key=lambda ch: max(ch.log_joint))
        _write_csv(out / "map_V.csv", ["node"] + [f"v{q}" for q in range(c)],
                   ([i] + [float(x) for x in row] for i, row in enumerate(best.map_V)))
        _write_csv(out / "map_w.csv", ["node", "w"], ([i, float(x)] for i, x in enumerate(best.map_w)))
        written += [str(out / "map_V.csv"), str(out / "map_w.csv")]
    _dump_json(summary, out / "summary.json")
    _dump_json({"command": "fit", **config}, out / "config.json")
    if not _all_finite(summary):
        raise CliError("summary contains non-finite values")
    return written


def _load_fit(fit_dir):
    fit_dir = Path(fit_dir)
    try:
        config = json.loads((fit_dir / "config.json").read_text(encoding="utf-8"))
        summary = json.loads((fit_dir / "summary.json").read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"no fit output in {fit_dir}: {exc}") from exc
    records = []
    for k in range(summary["n_chains"]):
        path = fit_dir / f"chain_{k}.jsonl"
        try:
            with open(path, encoding="utf-8") as fh:
                records += [json.loads(line) for line in fh if line.strip()]
        except OSError as exc:
            raise CliError(f"missing chain file {path}") from exc
    if not records:
        raise CliError(f"{fit_dir} holds no retained samples")
    return config, summary, records


def cmd_gof(config):
    _require(config, "fit_dir")
    fit_config, _, records = _load_fit(config["fit_dir"])
    graph_path = config["graph"] or fit_config["graph"]
    g = _load_graph(graph_path)
    n = config["n"] or g.n
    rng = np.random.default_rng(config["seed"])
    hyper_keys = ("alpha", "beta") if fit_config["model"] == "ig" else ("nu", "a", "b")
    samples = [{k: r[k] for k in hyper_keys + (("gamma",) if "gamma" in r else ())} for r in records]
    hists = posterior_predictive_degrees(samples, n, rng)
    report = goodness_of_fit(g, hists)

    out = Path(config["out_dir"] or config["fit_dir"])
    out.mkdir(parents=True, exist_ok=True)
    max_k = max(max(h) for h in hists + [degree_histogram(g)])
    ks, bands = ccdf_bands(hists, max(max_k, 1))
    observed = {row[0]: row[1] for row in degree_table(g)}
    _write_csv(out / "predictive_ccdf.csv", ["degree", "observed_ccdf", "q025", "q50", "q975"],
               ([int(k), observed.get(int(k), 0.0), float(lo), float(mid), float(hi)]
                for k, lo, mid, hi in zip(ks, *bands)))
    _dump_json(report.to_dict(), out / "gof.json")
    _dump_json({"command": "gof", **config, "graph": graph_path}, out / "gof_config.json")
    log.info("D = %.4f +- %.4f over %d predictive graphs", report.mean, report.std, len(hists))
    if not _all_finite(report.to_dict()):
        raise CliError("non-finite KS statistic")
    return [str(out / "gof.json")]


def _read_labels(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read labels {path}: {exc}") from exc
    labels = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            labels.append(int(line))
        except ValueError as exc:
            raise CliError(f"{path}:{lineno}: not an integer label: {raw!r}") from exc
    return np.array(labels, dtype=np.int64)


def cmd_communities(config):
    _require(config, "fit_dir")
    fit_dir = Path(config["fit_dir"])
    fit_config, _, _ = _load_fit(fit_dir)
    c = fit_config.get("c")
    if c is None or c < 2:
        raise CliError("community assignment needs a rank-c fit with c >= 2")
    try:
        with open(fit_dir / "map_V.csv", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))[1:]
    except OSError as exc:
        raise CliError(f"missing map_V.csv in {fit_dir}") from exc
    V = np.array([[float(x) for x in row[1:]] for row in rows])
    labels = assign_communities(V)
    g = _load_graph(config["graph"] or fit_config["graph"])
    if g.n != len(labels):
        raise CliError(f"graph has {g.n} nodes but the fit has {len(labels)}")

    out = Path(config["out_dir"] or fit_dir)
    out.mkdir(parents=True, exist_ok=True)
    Path(out / "assignments.txt").write_text("".join(f"{x}\n" for x in labels), encoding="utf-8")
    result = {"c": c, "community_sizes": np.bincount(labels, minlength=c).tolist()}
    if config["truth"]:
        truth = _read_labels(config["truth"])
        if len(truth) != len(labels):
            raise CliError(f"truth file has {len(truth)} labels but the graph has {len(labels)} nodes")
        try:
            truth = check_labels(truth, len(labels))
            result["accuracy"] = clustering_accuracy(labels, truth, max(c, int(truth.max()) + 1))
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    # block order: community, then descending affiliation strength, then node id
    order = np.lexsort((np.arange(g.n), -V[np.arange(g.n), labels], labels))
    position = np.empty(g.n, dtype=np.int64)
    position[order] = np.arange(g.n)
    _write_csv(out / "block_adjacency.csv", ["row", "col"],
               sorted((int(position[i]), int(position[j])) for i, j in g.edges))
    _dump_json(result, out / "communities.json")
    _dump_json({"command": "communities", **config}, out / "communities_config.json")
    return [str(out / "assignments.txt")]


def cmd_summarize(config):
    _require(config, "fit_dir")
    fit_config, summary, records = _load_fit(config["fit_dir"])
    lines = [f"model={fit_config['model']} c={fit_config.get('c')} n={summary['n']} |E|={summary['n_edges']}",
             f"chains={summary['n_chains']} retained={summary['n_samples']}"]
    for name, s in summary["hyperparameters"].items():
        lines.append(f"{name:>6}: mean {s['mean']:.4f}  {100 * s['level']:.0f}% CI ({s['lo']:.4f}, {s['hi']:.4f})")
    if "gamma" in summary:
        lines.append("gamma mean: " + ", ".join(f"{x:.4f}" for x in summary["gamma"]["mean"]))
    for k, rates in enumerate(summary["accept_rates"]):
        lines.append(f"chain {k} acceptance: " + ", ".join(f"{key} {v:.3f}" for key, v in sorted(rates.items())))
    lines.append(f"log joint: mean {summary['log_joint']['mean']:.2f}, std {summary['log_joint']['std']:.2f}")
    print("\n".join(lines))
    return []


COMMANDS = {"generate": cmd_generate, "fit": cmd_fit, "gof": cmd_gof,
            "communities": cmd_communities, "summarize": cmd_summarize}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        config = resolve_config(parser, args)
        COMMANDS[args.command](config)
    except CliError as exc:
        print(f"nrgraph {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
