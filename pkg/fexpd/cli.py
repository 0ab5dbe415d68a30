"""
Command-line interface of fexpd.

Every command reads one YAML configuration, runs its experiment and only then
writes its outputs (CSV tables, chains, JSON reports), so a failing command
leaves nothing behind. Exit codes: 0 on success, 2 for invalid input
(configuration, validation, missing data), 1 for runtime failures.
"""

import functools
import json
import sys
from typing import Any, Callable, Dict, Optional

import click
import yaml
from click_default_group import DefaultGroup
from pydantic import ValidationError

from fexpd.core.exceptions import EstimationError, FexpdError
from fexpd.core.inference.diagnostics import summarise_bvm
from fexpd.core.inference.experiments import (
    bias_dominance,
    rates_table,
    suboptimality_experiment,
)
from fexpd.core.inference.posterior import posterior_d
from fexpd.core.inference.priors import Prior
from fexpd.core.io import (
    OutputStage,
    chain_csv_text,
    path_csv_text,
    read_path_csv,
    report_text,
    table_text,
)
from fexpd.core.likelihood import bvm_params
from fexpd.core.logger import logger, setup_logging
from fexpd.core.models.config import (
    AppConfig,
    ExperimentConfig,
    ExperimentOverrides,
    LikelihoodKind,
)
from fexpd.core.models.response import (
    BvmData,
    FitData,
    RateStudyData,
    Report,
    SimulateManifest,
)
from fexpd.core.response import create_report
from fexpd.core.runner import (
    BvmTask,
    SimulateTask,
    global_replicate,
    run_replicates,
)
from fexpd.core.settings import DEFAULT_CONFIG, get_config
from fexpd.core.simulate import default_bandwidth, gph_estimate
from fexpd.core.utils import config_hash, replicate_seed


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, FexpdError):
        return error.exit_code
    if isinstance(
        error, (ValidationError, FileNotFoundError, yaml.YAMLError, click.UsageError)
    ):
        return 2
    return 1


def guarded(func: Callable[..., Any]) -> Callable[..., Any]:
    """
    Log any failure at critical level and exit with its mapped code.

    No report is written for a failed command; fexpd errors reach the log
    record as ``extra["error"]``.
    """

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except (click.exceptions.Exit, click.ClickException):
            raise
        except Exception as e:
            error = e.as_dict() if isinstance(e, FexpdError) else None
            logger.bind(error=error).opt(exception=e).critical(
                f"{func.__name__} failed: {e}"
            )
            sys.exit(exit_code_for(e))

    return wrapper


def experiment_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """--out, --seed and --jobs, shared by every experiment command."""
    func = click.option(
        "--jobs", type=int, default=None, help="Worker processes (default: all cores)."
    )(func)
    func = click.option("--seed", type=int, default=None, help="Base seed override.")(
        func
    )
    func = click.option(
        "--out",
        "output_dir",
        type=click.Path(file_okay=False),
        default=None,
        help="Output directory override.",
    )(func)
    return func


def resolve_experiment(ctx: click.Context, **overrides: Any) -> ExperimentConfig:
    app: AppConfig = ctx.obj["config"]
    return ExperimentOverrides(**overrides).apply(app.experiment)


def _report(
    data: Any, experiment: ExperimentConfig, command: str, seeds: Dict[str, int]
) -> Report:
    return create_report(
        data=data,
        message=f"{command} completed",
        config_hash=config_hash(experiment),
        command=command,
        seeds=seeds,
    )


@click.group(
    cls=DefaultGroup,
    default="rates",
    default_if_no_args=True,
    context_settings={"help_option_names": ["-h", "--help"]},
    help="Bayesian FEXP estimation of the long-memory parameter d.",
)
@click.option(
    "--config",
    "config_path",
    default=None,
    help=f"Configuration file. Default is './{DEFAULT_CONFIG}' if present.",
)
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[str]) -> None:
    if ctx.obj is None:
        ctx.obj = {}
    try:
        cfg = get_config(config_path)
    except Exception as e:
        logger.opt(exception=e).critical(f"Failed to load configuration: {e}")
        sys.exit(exit_code_for(e))
    ctx.obj["config"] = cfg
    setup_logging(cfg.logger)
    logger.debug("CLI initialized successfully.")


@cli.command(name="simulate")
@experiment_options
@click.pass_context
@guarded
def simulate(
    ctx: click.Context,
    output_dir: Optional[str],
    seed: Optional[int],
    jobs: Optional[int],
) -> None:
    """
    Draw replicate paths for every n of the grid.

    Writes path_n<n>_r<r>.csv per replicate and a simulate.json manifest.
    """
    experiment = resolve_experiment(ctx, output_dir=output_dir, seed=seed, jobs=jobs)
    digest = config_hash(experiment)
    items = [
        (n, global_replicate(experiment, i, r))
        for i, n in enumerate(experiment.n_grid)
        for r in range(experiment.replicates)
    ]
    paths = run_replicates(
        SimulateTask(experiment), items, experiment.jobs, ctx.obj["config"].logger
    )

    stage = OutputStage(experiment.output_dir)
    generators, notes, seeds = {}, {}, {}
    for (n, index), path in zip(items, paths):
        name = f"path_n{n}_r{index:03d}.csv"
        stage.add(name, path_csv_text(path, digest))
        generators[name] = path.generator
        seeds[name] = path.seed
        if path.note:
            notes[name] = path.note
    manifest = SimulateManifest(
        truth_hash=experiment.truth.truth_hash(),
        generator=generators,
        notes=notes,
        files=stage.names,
        seeds=seeds,
    )
    report = _report(manifest, experiment, "simulate", seeds)
    stage.add("simulate.json", report_text(report))
    stage.commit()


@cli.command(name="fit")
@experiment_options
@click.option("--data", type=click.Path(), default=None, help="Path CSV to fit.")
@click.option(
    "--whittle", is_flag=True, default=False, help="Use the Whittle likelihood."
)
@click.pass_context
@guarded
def fit(
    ctx: click.Context,
    output_dir: Optional[str],
    seed: Optional[int],
    jobs: Optional[int],
    data: Optional[str],
    whittle: bool,
) -> None:
    """
    Posterior of d for an observed path.

    Writes fit.json (summary, GPH estimate) and chain_k<k>.csv per chain.
    """
    experiment = resolve_experiment(
        ctx,
        output_dir=output_dir,
        seed=seed,
        jobs=jobs,
        data=data,
        likelihood=LikelihoodKind.WHITTLE if whittle else None,
    )
    if experiment.fit.data is None:
        raise click.UsageError("no data file given; use --data or fit.data")
    path = read_path_csv(experiment.fit.data)
    digest = config_hash(experiment)
    logger.info(f"fitting {experiment.fit.data} (n={path.n}, {experiment.likelihood})")

    prior = Prior.resolve(experiment.prior, path.n, experiment.truth, [path.n])
    summary, chains = posterior_d(
        path,
        prior,
        experiment.iters,
        experiment.seed,
        sampler=experiment.sampler,
        likelihood=experiment.likelihood,
        numerics=experiment.numerics,
        rng_kind=experiment.simulation.rng,
        credible_levels=experiment.fit.credible_levels,
    )
    try:
        gph = gph_estimate(
            path, default_bandwidth(path.n, experiment.fit.gph_exponent)
        ).model_dump()
    except EstimationError as e:
        logger.warning(f"GPH estimate unavailable: {e.message}")
        gph = None

    stage = OutputStage(experiment.output_dir)
    chain_files = []
    for chain in chains:
        chain_files.append(
            stage.add(f"chain_k{chain.k}.csv", chain_csv_text(chain, digest)).name
        )
    payload = FitData(
        likelihood=str(experiment.likelihood),
        n=path.n,
        summary=summary.model_dump(mode="json"),
        gph=gph,
        chains=chain_files,
    )
    seeds = {f"k{chain.k}": chain.seed for chain in chains}
    stage.add("fit.json", report_text(_report(payload, experiment, "fit", seeds)))
    stage.commit()
    logger.info(f"d = {summary.d_mean:.4f} +/- {summary.d_sd:.4f}")


@cli.command(name="bvm")
@experiment_options
@click.option(
    "--whittle", is_flag=True, default=False, help="Use the Whittle likelihood."
)
@click.pass_context
@guarded
def bvm(
    ctx: click.Context,
    output_dir: Optional[str],
    seed: Optional[int],
    jobs: Optional[int],
    whittle: bool,
) -> None:
    """
    Replicated comparison of the posterior of d with its normal reference.

    Writes bvm_n<n>.csv (one row per replicate) and bvm_n<n>.json per n.
    """
    experiment = resolve_experiment(
        ctx,
        output_dir=output_dir,
        seed=seed,
        jobs=jobs,
        likelihood=LikelihoodKind.WHITTLE if whittle else None,
    )
    digest = config_hash(experiment)
    stage = OutputStage(experiment.output_dir)
    for i, n in enumerate(experiment.n_grid):
        prior = Prior.resolve(experiment.prior, n, experiment.truth, experiment.n_grid)
        reference = bvm_params(experiment.truth, n, prior.k_sieve)
        indices = [
            global_replicate(experiment, i, r) for r in range(experiment.replicates)
        ]
        results = run_replicates(
            BvmTask(experiment, n), indices, experiment.jobs, ctx.obj["config"].logger
        )
        rows = [
            {
                "replicate": result["replicate"],
                "seed": result["seed"],
                **result["report"].model_dump(),
                "covered_90": result["covered_90"],
                "d_mean": result["d_mean"],
            }
            for result in results
        ]
        summary = summarise_bvm(
            [result["report"] for result in results],
            [result["covered_90"] for result in results],
        )
        payload = BvmData(
            n=n,
            k=prior.k_sieve,
            center=reference.center,
            sd=reference.sd,
            replicates=rows,
            **summary,
        )
        seeds = {f"r{row['replicate']:03d}": row["seed"] for row in rows}
        stage.add(f"bvm_n{n}.csv", table_text(rows, {"config_hash": digest, "n": n}))
        stage.add(
            f"bvm_n{n}.json", report_text(_report(payload, experiment, "bvm", seeds))
        )
        logger.info(
            f"bvm n={n}: median ks={summary['median_ks']:.4f}, "
            f"median var_ratio={summary['median_var_ratio']:.3f}"
        )
    stage.commit()


@cli.command(name="rate-study")
@experiment_options
@click.option(
    "--whittle", is_flag=True, default=False, help="Use the Whittle likelihood."
)
@click.pass_context
@guarded
def rate_study(
    ctx: click.Context,
    output_dir: Optional[str],
    seed: Optional[int],
    jobs: Optional[int],
    whittle: bool,
) -> None:
    """
    Posterior-mean errors of priors A and B over the n grid.

    Writes rate_study.csv and rate_study.json.
    """
    experiment = resolve_experiment(
        ctx,
        output_dir=output_dir,
        seed=seed,
        jobs=jobs,
        likelihood=LikelihoodKind.WHITTLE if whittle else None,
    )
    digest = config_hash(experiment)
    table = suboptimality_experiment(
        experiment, experiment.jobs, ctx.obj["config"].logger
    )
    rows = [row.model_dump() for row in table.rows]
    payload = RateStudyData(bias_dominance=table.bias_dominance, rows=rows)
    seeds = {
        f"r{index:03d}": replicate_seed(experiment.seed, experiment.seed_stride, index)
        for index in range(len(experiment.n_grid) * experiment.replicates)
    }
    stage = OutputStage(experiment.output_dir)
    stage.add(
        "rate_study.csv",
        table_text(
            rows, {"config_hash": digest, "bias_dominance": table.bias_dominance}
        ),
    )
    report = _report(payload, experiment, "rate-study", seeds)
    stage.add("rate_study.json", report_text(report))
    stage.commit()


@cli.command(name="rates")
@click.option(
    "--out",
    "output_dir",
    type=click.Path(file_okay=False),
    default=None,
    help="Output directory override.",
)
@click.pass_context
@guarded
def rates(ctx: click.Context, output_dir: Optional[str]) -> None:
    """
    Deterministic table of sieve sizes, rate scales and biases over the n grid.

    Writes rates.csv and rates.json.
    """
    experiment = resolve_experiment(ctx, output_dir=output_dir)
    digest = config_hash(experiment)
    rows = rates_table(experiment)
    dominance, _ = bias_dominance(experiment.truth, experiment.n_grid, experiment.prior)
    stage = OutputStage(experiment.output_dir)
    stage.add("rates.csv", table_text(rows, {"config_hash": digest}))
    stage.add(
        "rates.json",
        report_text(
            _report(
                {"bias_dominance": dominance, "rows": rows}, experiment, "rates", {}
            )
        ),
    )
    stage.commit()
    for row in rows:
        click.echo(
            f"n={row['n']:>6}  k_n={row['k_n']:>3}  k'_n={row['k_n_prime']:>3}  "
            f"bias(k_n)={row['bias_k_n']:.3e}  bias(k'_n)={row['bias_k_n_prime']:.3e}"
        )


SCHEMAS = {
    "config.schema.json": AppConfig,
    "report.schema.json": Report,
    "simulate.schema.json": SimulateManifest,
    "fit.schema.json": FitData,
    "bvm.schema.json": BvmData,
    "rate_study.schema.json": RateStudyData,
}


@cli.command(name="schema")
@click.option(
    "--out",
    "output_dir",
    type=click.Path(file_okay=False),
    default="docs/schema",
    show_default=True,
    help="Directory the JSON schemas are written to.",
)
@guarded
def schema(output_dir: str) -> None:
    """Write the JSON schemas of the configuration and of every report."""
    stage = OutputStage(output_dir)
    for name, model in SCHEMAS.items():
        text = json.dumps(model.model_json_schema(), indent=2, sort_keys=True)
        stage.add(name, text + "\n")
    stage.commit()


if __name__ == "__main__":
    try:
        cli(prog_name="fexpd")
    except Exception as e:
        logger.opt(exception=e).critical(f"CLI runtime error: {e}")
        sys.exit(1)
