import logging
import time
from contextlib import contextmanager
from typing import Iterable, Iterator, Tuple, Union

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

FORMAT = "%(message)s"
DATE_FORMAT = "[%X]"
LEVELS = ("debug", "info", "warning", "error", "critical")

console = Console()

logging.basicConfig(
    level=logging.INFO,
    format=FORMAT,
    datefmt=DATE_FORMAT,
    handlers=[RichHandler(console=console, rich_tracebacks=True, show_path=False)],
)


class Logger:
    """Joins varargs like print() and logs at the caller's stack frame."""

    def __init__(self, name, level: Union[int, str] = logging.INFO):
        self.log = logging.getLogger(name)
        self.set_level(level)

    def set_level(self, level: Union[int, str]) -> None:
        if isinstance(level, str):
            level = level.upper()
        self.log.setLevel(level)

    def __getattr__(self, method_type: str):
        if method_type not in LEVELS:
            raise AttributeError(f"Logger has no method {method_type}")

        def emit(*msg: object, sep=" ") -> None:
            text = sep.join(v if isinstance(v, str) else str(v) for v in msg)
            # stack-frame - emit - caller
            getattr(self.log, method_type)(text, stacklevel=2)

        return emit

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Log the start and wall time of one pipeline stage."""
        self.log.info(f"[{name}] started", stacklevel=3)
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.log.info(f"[{name}] finished in {elapsed:.2f} s", stacklevel=3)


def print_table(
    rows: Iterable[Tuple[object, object]],
    title: str = None,
    headers: Tuple[str, str] = None,
) -> None:
    table = Table(title=title, show_header=headers is not None, show_lines=True)
    key_header, value_header = headers or ("Key", "Value")
    table.add_column(key_header, style="cyan", no_wrap=True)
    table.add_column(value_header, style="magenta")
    for key, value in rows:
        table.add_row(str(key), str(value))
    console.print(table, justify="center")


logger = Logger("autopilot")
