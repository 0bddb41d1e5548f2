import json
import logging
import pathlib
import sys

import click

from ensemblekss import datafile, synth
from ensemblekss.affinity import clustered_graph
from ensemblekss.evaluation import metric_report
from ensemblekss.geometry import normalize_columns
from ensemblekss.model import SeedSpec
from harness import extensions
from harness.experiment import ALGORITHMS, MODES, ExperimentConfig, run_algorithm, run_experiment
from harness.theory import theory_suite

logger = logging.getLogger(__name__)

# exit code for a failed theory check
THEORY_FAILURE = 2


class QParamType(click.ParamType):
    """A positive integer, or "none" to skip thresholding"""
    name = "q"

    def convert(self, value, param, ctx):
        if value is None or isinstance(value, int):
            return value
        if str(value).lower() == "none":
            return None
        try:
            q = int(value)
        except ValueError:
            self.fail(f"{value!r} is not an integer or 'none'", param, ctx)
        if q < 1:
            self.fail(f"q must be positive, got {q}", param, ctx)
        return q


@click.group()
@click.option("--settings", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Python config file (defaults to config.py)")
@click.option("-v", "--verbose", is_flag=True, help="Log at DEBUG level")
@click.pass_context
def cli(ctx, settings, verbose):
    """Ensemble K-subspaces clustering toolkit"""
    config = extensions.load_config(settings)
    extensions.configure_logging("DEBUG" if verbose else config["LOG_LEVEL"])
    ctx.obj = config


@cli.command()
@click.option("--kind", type=click.Choice(["random", "angled"]), default="random")
@click.option("--D", "D", type=int, default=100)
@click.option("--K", "K", type=int, default=3, help="Number of subspaces (random only)")
@click.option("--d", "d", type=int, default=5)
@click.option("--Nk", "Nk", type=int, default=100, help="Points per subspace")
@click.option("--sigma", type=float, default=0.0)
@click.option("--theta", type=float, default=None, help="Principal angle (angled only)")
@click.option("--missing", type=int, default=0, help="Unobserved entries per point")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def generate(kind, D, K, d, Nk, sigma, theta, missing, seed, out_dir):
    """Generate a synthetic union-of-subspaces problem instance"""
    spec = SeedSpec(seed)
    if kind == "random":
        instance = synth.gen_random_uos(D, K, d, Nk, sigma, spec.spawn(0))
    else:
        if theta is None:
            raise click.UsageError("--theta is required for --kind angled")
        instance = synth.gen_angled_uos(D, d, theta, Nk, sigma, spec.spawn(0))
    if missing:
        instance = synth.apply_missing(instance, missing, spec.spawn(1))
    datafile.save_instance(out_dir, instance)
    click.echo(f"Wrote {instance.num_points} points in R^{instance.ambient_dim} to {out_dir}")


@cli.command()
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--algo", type=click.Choice(list(ALGORITHMS)), default="ekss")
@click.option("--K", "K", type=int, required=True, help="Number of output clusters")
@click.option("--Kbar", "Kbar", type=int, default=None, help="Candidate subspaces per base clustering (default K)")
@click.option("--dbar", "dbar", type=int, default=None, help="Candidate dimension")
@click.option("--q", "q", type=QParamType(), default="none")
@click.option("--B", "B", type=int, default=1000, help="Base clusterings")
@click.option("--T", "T", type=int, default=3, help="KSS iterations")
@click.option("--seed", type=int, default=0)
@click.option("--weighted", is_flag=True, help="Weight votes by KSS quality")
@click.option("--normalize", is_flag=True, help="Scale points to unit norm first")
@click.option("--n-jobs", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True, help="Labels CSV")
@click.option("--affinity-out", type=click.Path(dir_okay=False), default=None, help="Co-association CSV")
@click.pass_obj
def cluster(config, data_path, algo, K, Kbar, dbar, q, B, T, seed, weighted, normalize, n_jobs, out_path,
            affinity_out):
    """Cluster the columns of a data CSV"""
    data = datafile.load_data_csv(data_path)
    if normalize:
        data = normalize_columns(data)
    if algo != "tsc" and dbar is None:
        raise click.UsageError(f"--dbar is required for --algo {algo}")
    if algo == "tsc" and q is None:
        raise click.UsageError("TSC needs --q")
    labels, A = run_algorithm(algo, data, K, Kbar or K, dbar, q, B, T, SeedSpec(seed), weighted,
                              n_jobs=n_jobs or config["N_JOBS"])
    datafile.save_labels(out_path, labels)
    if affinity_out:
        if A is None:
            raise click.UsageError(f"--algo {algo} does not build an affinity matrix")
        # the graph that was spectrally clustered
        datafile.save_matrix_csv(affinity_out, clustered_graph(A, q))
    click.echo(f"Clustered {labels.size} points into {len(set(labels.tolist()))} clusters")


@cli.command()
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--truth", "truth_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--affinity", "affinity_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Data CSV for the angular separation (needs --q)")
@click.option("--q", "q", type=int, default=None)
@click.option("--instance", "instance_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Instance directory whose true bases give pairwise subspace affinities")
@click.option("--tol", type=float, default=0.0, help="Edge threshold for connected components")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def evaluate(labels_path, truth_path, affinity_path, data_path, q, instance_dir, tol, out_path):
    """Score a clustering against the truth and print a JSON metric report"""
    out = datafile.load_labels(labels_path)
    truth = datafile.load_labels(truth_path)
    A = datafile.load_matrix_csv(affinity_path) if affinity_path else None
    data = datafile.load_data_csv(data_path) if data_path else None
    bases = datafile.load_instance(instance_dir).true_bases if instance_dir else None
    report = metric_report(out, truth, A=A, data=data, q=q, bases=bases, tol=tol)
    text = json.dumps(report.to_dict(), indent=2)
    if out_path:
        pathlib.Path(out_path).write_text(text + "\n")
    click.echo(text)


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON experiment configuration")
@click.option("--mode", type=click.Choice(list(MODES)), default=None)
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--algorithm", "algorithms", type=click.Choice(list(ALGORITHMS)), multiple=True)
@click.option("--B", "B", type=int, default=None)
@click.option("--T", "T", type=int, default=None)
@click.option("--spacing", type=click.Choice(["log", "linear"]), default=None)
@click.option("--weighted/--unweighted", default=None)
@click.option("--output-dir", type=click.Path(file_okay=False), default=None)
@click.option("--n-jobs", type=int, default=None)
@click.pass_obj
def experiment(config, config_path, mode, trials, seed, algorithms, B, T, spacing, weighted, output_dir, n_jobs):
    """Run a grid experiment and write tidy per-trial and summary results"""
    overrides = {
        "mode": mode, "trials": trials, "seed": seed, "algorithms": list(algorithms) or None, "B": B, "T": T,
        "spacing": spacing, "weighted": weighted, "output_dir": output_dir,
        "n_jobs": n_jobs or config["N_JOBS"],
    }
    defaults = {"output_dir": config["OUTPUT_DIR"]}
    if config_path:
        cfg = ExperimentConfig.from_json(config_path, defaults, **overrides)
    else:
        if mode is None:
            raise click.UsageError("Give --mode or --config")
        cfg = ExperimentConfig.from_dict({**defaults, **{k: v for k, v in overrides.items() if v is not None}})

    backend = extensions.get_backend(config, cfg.output_dir)
    rows, summary = run_experiment(cfg, backend)
    click.echo(f"Experiment {cfg.run_id()} ({cfg.mode}): {len(rows)} trial rows, {len(summary)} summary rows")
    for row in summary:
        if "mean_error_pct" in row:
            click.echo(f"  cell {row['cell']} {row['algorithm']:>5} B={row['B']}: {row['mean_error_pct']:.2f}%")


@cli.command()
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def theory(ctx, seed, out_path):
    """Numerically check the EKSS-0 theory; exits with status 2 if any check fails"""
    report = theory_suite(seed)
    text = json.dumps(report, indent=2)
    if out_path:
        pathlib.Path(out_path).write_text(text + "\n")
    click.echo(text)
    if not report["passed"]:
        ctx.exit(THEORY_FAILURE)


@cli.command("create-db")
@click.pass_obj
def create_database(config):
    """Create database tables for the db result backend"""
    click.echo("Creating database tables...")
    extensions.create_tables(config["SQLALCHEMY_DATABASE_URI"])
    click.echo("Done")


def main(args=None):
    """Console entry point: usage and input errors exit with 1, a failed theory check with 2"""
    try:
        rv = cli.main(args=args, prog_name="ekss", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(1)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        sys.exit(1)
    except (ValueError, OSError) as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(1)
    sys.exit(rv if isinstance(rv, int) else 0)
