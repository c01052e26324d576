import sys
import os
from typing import Callable, List, Optional

import typer
from pydantic import ValidationError

# Add the app directory to Python path
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))

from cli.models.base import EXIT_FAILURE, EXIT_USAGE, CommandResult
from cli.models.requests import ExperimentConfig, load_experiment_config
from services.baseline_service import baseline_service
from services.data_service import data_service
from services.evaluation_service import evaluation_service
from services.training_service import training_service
from settings.config import settings
from utils.exceptions import ConfigError, GridFormatError
from utils.helper import write_manifest
from utils.logger import exception_logging, logger

app = typer.Typer(
    name="maunet",
    help=f"{settings.app_name}: MAUNet bias correction and downscaling experiments",
    no_args_is_help=True,
    add_completion=False,
)


class GlobalOptions:
    def __init__(self, config: Optional[str], out: Optional[str], seed: Optional[int], threads: Optional[int]):
        self.config = config
        self.out = out
        self.seed = seed
        self.threads = threads

    def overrides(self) -> dict:
        return {
            "out_dir": self.out,
            "data_seed": self.seed,
            "train_seed": self.seed,
            "threads": self.threads,
        }


def load_config(options: GlobalOptions) -> ExperimentConfig:
    return load_experiment_config(options.config, options.overrides())


def run_command(ctx: typer.Context, command: str, action: Callable[[ExperimentConfig], List[str]]) -> CommandResult:
    """
    Load the config, run one command, record the manifest and report.

    Configuration and file-format problems exit with code 2, any other
    failure with code 1. Nothing is written to the manifest on failure.
    """
    try:
        cfg = load_config(ctx.obj)
        logger.info(f"Running '{command}' with output directory {cfg.out_dir}")
        files = action(cfg)
        write_manifest(cfg.out_dir, command, cfg.model_dump(), cfg.seeds(), files)
        result = CommandResult(
            command=command,
            message=f"{command} wrote {len(files)} files",
            data={"out_dir": cfg.out_dir, "files": sorted(files)},
        )
    except (ConfigError, GridFormatError, ValidationError) as e:
        logger.error(f"{command} failed: {e}")
        result = CommandResult(command=command, error=True, message=str(e), exit_code=EXIT_USAGE)
    except Exception as e:
        logger.error(f"{command} failed: {e}", exc_info=settings.debug)
        result = CommandResult(command=command, error=True, message=str(e), exit_code=EXIT_FAILURE)

    typer.echo(result.model_dump_json(indent=2))
    if result.error:
        raise typer.Exit(code=result.exit_code)
    return result


@app.callback()
def main_options(
    ctx: typer.Context,
    config: Optional[str] = typer.Option(None, "--config", help="Experiment config file (key = value lines)"),
    out: Optional[str] = typer.Option(None, "--out", help="Output directory, overrides out_dir"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Overrides data_seed and train_seed"),
    threads: Optional[int] = typer.Option(None, "--threads", min=1, help="Worker threads (default: MAUNET_THREADS)"),
):
    ctx.obj = GlobalOptions(config, out, seed, threads)


@app.command("gen-data")
def gen_data(ctx: typer.Context):
    """Generate the synthetic truth / biased / low-resolution series"""
    run_command(ctx, "gen-data", data_service.generate)


@app.command("train")
def train(ctx: typer.Context):
    """Train the teacher and the GT, MP and KR students"""
    run_command(ctx, "train", training_service.train)


@app.command("predict")
def predict(
    ctx: typer.Context,
    checkpoint: str = typer.Option(..., "--checkpoint", help="MCK1 checkpoint"),
    input_path: str = typer.Option("", "--input", help="GFB1 input series (default: test inputs)"),
    output: str = typer.Option("", "--output", help="Destination GFB1 path"),
):
    """Run a checkpoint over an input series"""
    run_command(ctx, "predict", lambda cfg: training_service.predict(cfg, checkpoint, input_path, output))


@app.command("evaluate")
def evaluate(
    ctx: typer.Context,
    checkpoint: Optional[List[str]] = typer.Option(None, "--checkpoint", help="MCK1 checkpoint to evaluate"),
    prediction: Optional[List[str]] = typer.Option(None, "--prediction", help="GFB1 prediction to evaluate"),
):
    """Score checkpoints and baselines against the test targets"""
    run_command(ctx, "evaluate",
                lambda cfg: evaluation_service.evaluate(cfg, checkpoint or [], prediction or []))


@app.command("baseline")
def baseline(ctx: typer.Context):
    """Compute QM, QDM and interpolation baselines"""
    run_command(ctx, "baseline", baseline_service.run)


@app.command("extremes")
def extremes(ctx: typer.Context):
    """Extreme indices and extreme-day detection scores"""
    run_command(ctx, "extremes", evaluation_service.extremes)


@app.command("robustness")
def robustness(
    ctx: typer.Context,
    checkpoint: Optional[str] = typer.Option(None, "--checkpoint", help="MCK1 checkpoint (default: KR)"),
):
    """Compare real inputs with skew-normal random inputs"""
    run_command(ctx, "robustness", lambda cfg: evaluation_service.robustness(cfg, checkpoint))


@app.command("count-params")
def count_params(
    ctx: typer.Context,
    height: int = typer.Option(128, "--height", min=4),
    width: int = typer.Option(128, "--width", min=4),
):
    """Parameter, memory and FLOP accounting of both architectures"""
    run_command(ctx, "count-params", lambda cfg: evaluation_service.count_params(cfg, height, width))


def main():
    sys.excepthook = exception_logging
    app()


if __name__ == "__main__":
    main()
