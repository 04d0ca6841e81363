import argparse
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Tuple

ArgSpec = Tuple[Tuple[str, ...], Dict[str, Any]]


def arg(*flags: str, **kwargs) -> ArgSpec:
    return flags, kwargs


@dataclass
class LaCommand:
    """
    Represents one CLI subcommand.
    The function receives the parsed namespace, the loaded config and the run directory and returns an exit code.
    """

    name: str
    function: Callable[..., int]
    description: str
    parameters: List[ArgSpec] = field(default_factory=list)

    def __call__(self, *args: Any, **kwds: Any) -> int:
        return self.function(*args, **kwds)

    def add_to(self, subparsers) -> argparse.ArgumentParser:
        parser = subparsers.add_parser(self.name, help=self.description, description=self.description)
        for flags, kwargs in self.parameters:
            parser.add_argument(*flags, **kwargs)
        parser.set_defaults(command=self)
        return parser
