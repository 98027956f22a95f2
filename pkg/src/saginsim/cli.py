"""Command-line experiment runner: run, sweep, audit, bench-sghs, bench-radar and report."""

from __future__ import annotations

import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import METHODS, ConfigError, config_hash, dump_config, from_dict, parse_config, to_dict
from .orchestrator import (audit_decisions, run_experiment, write_decisions, write_records_csv,
                           write_summary)

SWEEPS = {
    # average task size in MB; one MB is 8e6 bits
    "datasize": ("tasks.task_size", (5, 10, 20)),
    "uav_cpu": ("compute.uav_cpu_max", (1e8, 3e8, 5e8)),
    "bs_cpu": ("compute.bs_cpu_max", (2.5e9, 5e9, 1e10)),
    "v": ("v_weight", (0.1, 1.0, 10.0)),
}


@dataclass(frozen=True)
class RunManifest:
    config_path: str | None
    config_hash: str
    seeds: tuple
    methods: tuple
    out_dir: str
    version: str
    sweep: str | None = None
    sweep_values: tuple = ()


def _sweep_value(param: str, value: float):
    if param == "datasize":
        return int(round(value * 8e6))
    return float(value)


def _stem(method: str, seed: int, point: str | None = None) -> str:
    return f"{method}_s{seed}" if point is None else f"{method}_{point}_s{seed}"


def _outputs(out: Path, stem: str) -> list[Path]:
    return [out / f"{stem}.csv", out / f"{stem}.decisions.jsonl", out / f"{stem}.summary.json"]


def _run_job(job):
    """Worker: one (config, seed, method) run written to its own files."""
    cfg_dict, out_dir, stem = job
    cfg = from_dict(cfg_dict)
    records, summary = run_experiment(cfg)
    csv_p, dec_p, sum_p = _outputs(Path(out_dir), stem)
    write_records_csv(csv_p, records, cfg.seed)
    write_decisions(dec_p, records)
    write_summary(sum_p, summary)
    return stem, summary


def _execute(jobs, n_jobs: int):
    if n_jobs <= 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_run_job, jobs))


def _failed_audits(results) -> list[str]:
    bad = []
    for stem, s in results:
        if s["bound_violations"]:
            bad.append(f"{stem}: bound check failed on {s['bound_violations']} slots")
        if not s["conservation"]["ok"]:
            bad.append(f"{stem}: conservation audit failed (error {s['conservation']['error']})")
    return bad


def _guard(paths, force: bool) -> None:
    clash = [str(p) for p in paths if p.exists()]
    if clash and not force:
        raise click.UsageError(f"refusing to overwrite {clash[0]} (and {len(clash) - 1} more); pass --force")


def _load(config, overrides, v_weight, slots):
    try:
        cfg = parse_config(config)
        kw = dict(_parse_set(s) for s in overrides)
        if v_weight is not None:
            kw["v_weight"] = v_weight
        if slots is not None:
            kw["slots"] = slots
        return cfg.with_overrides(**kw) if kw else cfg
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc


def _parse_set(item: str):
    if "=" not in item:
        raise click.UsageError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        val = raw
    return key.strip(), val


def _methods(method) -> tuple:
    names = tuple(method) or ("drl_perception",)
    if "all" in names:
        return METHODS
    for m in names:
        if m not in METHODS:
            raise click.UsageError(f"unknown method {m!r}; choose from {', '.join(METHODS)} or all")
    return names


def _write_manifest(out: Path, manifest: RunManifest, cfg) -> None:
    (out / "manifest.json").write_text(json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n")
    (out / "config.yaml").write_text(dump_config(cfg))


common = [
    click.option("--config", type=click.Path(dir_okay=False), default=None, help="YAML experiment file."),
    click.option("--seed", "seeds", type=int, multiple=True, help="Seed (repeatable); default 0."),
    click.option("--slots", type=int, default=None, help="Horizon T in slots."),
    click.option("--method", multiple=True, help="Method name (repeatable) or 'all'."),
    click.option("--v-weight", type=float, default=None, help="Lyapunov weight V."),
    click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True),
    click.option("--jobs", type=int, default=1, show_default=True, help="Parallel worker processes."),
    click.option("--force", is_flag=True, help="Overwrite existing outputs."),
    click.option("--set", "overrides", multiple=True, help="Dotted override, e.g. tasks.arrival_rate=0.3"),
    click.option("--plot", is_flag=True, help="Render PNG figures next to the CSVs."),
]


def with_common(fn):
    for opt in reversed(common):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(__version__)
def main():
    """SAGIN joint hosting and offloading simulator."""


@main.command()
@with_common
def run(config, seeds, slots, method, v_weight, out, jobs, force, overrides, plot):
    """Run methods x seeds at one configuration."""
    cfg = _load(config, overrides, v_weight, slots)
    methods = _methods(method)
    seeds = tuple(seeds) or (0,)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    stems = [_stem(m, s) for m in methods for s in seeds]
    _guard([p for st in stems for p in _outputs(out, st)] + [out / "manifest.json"], force)
    base = to_dict(cfg)
    jobs_ = []
    for m in methods:
        for s in seeds:
            d = dict(base, method=m, seed=s)
            jobs_.append((d, str(out), _stem(m, s)))
    _write_manifest(out, RunManifest(config, config_hash(cfg), seeds, methods, str(out), __version__), cfg)
    results = _execute(jobs_, jobs)
    for stem, s in results:
        click.echo(f"{stem}: cost {s['time_avg_cost']:.6g}  H_u {s['time_avg_H_u']:.6g}  "
                   f"H_bs {s['time_avg_H_bs']:.6g}  bound_violations {s['bound_violations']}")
    if plot:
        from .report import render_directory
        render_directory(out)
    bad = _failed_audits(results)
    if bad:
        for b in bad:
            click.echo(f"AUDIT FAILED {b}", err=True)
        sys.exit(1)


def trend_rows(param: str, values, methods, seeds, summaries: dict) -> list[dict]:
    """Mean final cost per (method, value) plus the per-seed costs."""
    rows = []
    for m in methods:
        for v in values:
            costs = [summaries[(m, v, s)]["time_avg_cost"] for s in seeds]
            rows.append(dict(param=param, value=v, method=m, mean_cost=float(np.mean(costs)),
                             seed_costs=" ".join(repr(float(c)) for c in costs)))
    return rows


def monotone_report(values, methods, seeds, summaries) -> list[tuple[str, int, int, bool]]:
    """Per method: seeds whose final cost is nondecreasing along the sweep, and the majority verdict."""
    out = []
    for m in methods:
        good = 0
        for s in seeds:
            c = [summaries[(m, v, s)]["time_avg_cost"] for v in values]
            good += all(b >= a for a, b in zip(c, c[1:]))
        out.append((m, good, len(seeds), good * 2 > len(seeds)))
    return out


@main.command()
@click.option("--param", type=click.Choice(sorted(SWEEPS)), required=True)
@click.option("--values", default=None, help="Comma-separated sweep points (datasize in MB).")
@with_common
def sweep(param, values, config, seeds, slots, method, v_weight, out, jobs, force, overrides, plot):
    """Sweep one parameter over methods x seeds and check the monotone cost trend."""
    cfg = _load(config, overrides, v_weight, slots)
    methods = _methods(method) if method else METHODS
    seeds = tuple(seeds) or (0,)
    key, default_vals = SWEEPS[param]
    vals = tuple(float(v) for v in values.split(",")) if values else tuple(float(v) for v in default_vals)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    jobs_, index = [], {}
    base = to_dict(cfg)
    for v in vals:
        pcfg = cfg.with_overrides(**{key: _sweep_value(param, v)})
        pd = to_dict(pcfg)
        for m in methods:
            for s in seeds:
                stem = _stem(m, s, f"{param}{v:g}")
                index[stem] = (m, v, s)
                jobs_.append((dict(pd, method=m, seed=s), str(out), stem))
    _guard([p for _, _, st in jobs_ for p in _outputs(out, st)] + [out / "trend.csv"], force)
    _write_manifest(out, RunManifest(config, config_hash(from_dict(base)), seeds, methods, str(out),
                                     __version__, param, vals), cfg)
    results = _execute(jobs_, jobs)
    summaries = {index[stem]: s for stem, s in results}
    rows = trend_rows(param, vals, methods, seeds, summaries)
    with open(out / "trend.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    lines = [f"monotone trend of time-averaged cost in {param} over {', '.join(f'{v:g}' for v in vals)}"]
    for m, good, n, ok in monotone_report(vals, methods, seeds, summaries):
        lines.append(f"{'PASS' if ok else 'FAIL'} {m}: nondecreasing on {good}/{n} seeds")
    (out / "trend_report.txt").write_text("\n".join(lines) + "\n")
    click.echo("\n".join(lines))
    if plot:
        from .report import render_directory
        render_directory(out)
    bad = _failed_audits(results)
    if bad:
        for b in bad:
            click.echo(f"AUDIT FAILED {b}", err=True)
        sys.exit(1)


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--config", type=click.Path(dir_okay=False), default=None,
              help="Config used for the run; defaults to DIRECTORY/config.yaml.")
def audit(directory, config):
    """Recompute costs and queues from logged decisions and diff them against the outputs."""
    d = Path(directory)
    cfg_path = config or (d / "config.yaml" if (d / "config.yaml").is_file() else None)
    base = parse_config(cfg_path)
    logs = sorted(d.glob("*.decisions.jsonl"))
    if not logs:
        raise click.UsageError(f"no decision logs in {d}")
    failed = 0
    for log in logs:
        stem = log.name[: -len(".decisions.jsonl")]
        summary_p = d / f"{stem}.summary.json"
        cfg = base
        if summary_p.is_file():
            s = json.loads(summary_p.read_text())
            cfg = base.with_overrides(method=s["method"], seed=s["seed"], v_weight=s["v_weight"])
        res = audit_decisions(cfg, log, d / f"{stem}.csv")
        status = "ok" if res["ok"] else "FAILED"
        click.echo(f"{stem}: {status} slots {res['slots']} max_cost_diff {res['max_cost_diff']:.3g} "
                   f"max_queue_diff {res['max_queue_diff']} max_csv_cost_diff {res['max_csv_cost_diff']:.3g}")
        failed += not res["ok"]
    if failed:
        click.echo(f"AUDIT FAILED on {failed} run(s)", err=True)
        sys.exit(1)


@main.command("bench-sghs")
@click.option("--instances", type=int, default=50, show_default=True)
@click.option("--ni", type=int, default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Write per-instance CSV and a trace.")
@click.option("--force", is_flag=True)
def bench_sghs(instances, ni, seed, out, force):
    """SGHS against the exact P3 oracle on random instances with at most three coupled pairs."""
    from .baselines import p3_analytic_oracle
    from .p3 import random_instance
    from .sghs import SghsConfig, solve_p3, write_trace

    rng = np.random.default_rng(seed)
    cfg = SghsConfig(ni=ni)
    rows, first_trace = [], None
    t0 = time.perf_counter()
    for i in range(instances):
        inst = random_instance(rng)
        ref = float(inst.value_f(p3_analytic_oracle(inst)))
        _, best, trace = solve_p3(inst, cfg, rng)
        gap = (best - ref) / abs(ref) if ref != 0 else abs(best)
        rows.append(dict(instance=i, dim=inst.dim, oracle=ref, sghs=best, rel_gap=gap))
        first_trace = trace if first_trace is None else first_trace
    hit = sum(r["rel_gap"] <= 0.01 for r in rows)
    click.echo(f"SGHS within 1% of oracle on {hit}/{instances} instances "
               f"(max gap {max(r['rel_gap'] for r in rows):.3g}, {time.perf_counter() - t0:.1f}s)")
    if out:
        o = Path(out)
        o.mkdir(parents=True, exist_ok=True)
        _guard([o / "sghs_bench.csv", o / "sghs_trace.csv"], force)
        with open(o / "sghs_bench.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        write_trace(first_trace, o / "sghs_trace.csv")


@main.command("bench-radar")
@click.option("--config", type=click.Path(dir_okay=False), default=None)
@click.option("--points", type=int, default=20, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Optional CSV path.")
@click.option("--force", is_flag=True)
def bench_radar(config, points, out, force):
    """Waveform-level FMCW check: FFT beat frequency and range against the closed forms."""
    rows = radar_oracle_rows(parse_config(config), points)
    bad = [r for r in rows if not (r["bin_ok"] and r["range_ok"])]
    for r in rows:
        click.echo(f"d={r['distance']:8.2f} m  f_if={r['f_closed']:.6g} Hz  fft={r['f_fft']:.6g} Hz  "
                   f"d_hat={r['d_hat']:8.3f} m  {'ok' if r['bin_ok'] and r['range_ok'] else 'FAIL'}")
    if out:
        p = Path(out)
        _guard([p], force)
        with open(p, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    if bad:
        sys.exit(1)


def radar_oracle_rows(cfg, points: int = 20) -> list[dict]:
    from .perception import (SPEED_OF_LIGHT, RadarConfig, estimate_distance, fft_peak_frequency,
                             fmcw_if_frequency, synthesize_if_signal)

    rc = RadarConfig.from_config(cfg)
    rows = []
    for d in np.linspace(10.0, 500.0, points):
        f_closed = fmcw_if_frequency(float(d), rc)
        t, s_if = synthesize_if_signal(float(d), rc)
        f_fft, bin_w = fft_peak_frequency(s_if, rc.sample_rate)
        d_hat = estimate_distance(f_fft, rc)
        rows.append(dict(distance=float(d), f_closed=f_closed, f_fft=f_fft, bin_width=bin_w, d_hat=d_hat,
                         bin_ok=abs(f_fft - f_closed) <= bin_w,
                         range_ok=abs(d_hat - d) <= SPEED_OF_LIGHT / (2.0 * rc.sweep_bandwidth)))
    return rows


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
def report(directory):
    """Render PNG figures next to the CSVs in DIRECTORY."""
    from .report import render_directory
    made = render_directory(directory)
    for p in made:
        click.echo(str(p))
    if not made:
        click.echo("no plottable CSVs found", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
