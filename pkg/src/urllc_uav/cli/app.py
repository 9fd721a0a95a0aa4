from __future__ import annotations

from typing import Annotated

import typer

from urllc_uav.cli.common import configure_logging
from urllc_uav.cli.offline import collect, fit, train, validate
from urllc_uav.cli.online import evaluate, place, report, run
from urllc_uav.core.config import settings

app = typer.Typer(no_args_is_help=True, help="Tail-latency learning and UAV placement.")


@app.callback()
def main(
    log_level: Annotated[str | None, typer.Option("--log-level", help="Logging level")] = None,
) -> None:
    configure_logging(log_level or settings.log_level)


app.command("collect")(collect)
app.command("fit")(fit)
app.command("train")(train)
app.command("validate")(validate)
app.command("place")(place)
app.command("evaluate")(evaluate)
app.command("report")(report)
app.command("run")(run)
