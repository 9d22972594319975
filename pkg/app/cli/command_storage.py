import argparse
import inspect
import typing
from typing import Any, Callable, Dict, List, NamedTuple, Optional

from docstring_parser import parse

TYPE_MAPPING = {
    int: int,
    str: str,
    float: float,
}


class CommandParameter(NamedTuple):
    name: str
    type_: Any
    required: bool
    default: Any
    help: str = ''

    @property
    def flag(self) -> str:
        return '--' + self.name.replace('_', '-')


def _unwrap_optional(annotation):
    if typing.get_origin(annotation) is typing.Union:
        args = [a for a in typing.get_args(annotation) if a is not type(None)]
        if len(args) == 1:
            return args[0]
    return annotation


class CommandStorage:
    """Registry of CLI verbs described by their signatures and docstrings."""

    def __init__(self):
        self.commands = {}

    def register(self, func: Callable):
        self.commands[func.__name__] = {
            'obj': func,
            'info': self.extract_command_info(func)
        }
        return func

    @staticmethod
    def extract_command_info(command: Callable) -> Dict[str, Any]:
        docstring = inspect.getdoc(command)
        parsed = parse(docstring) if docstring else None
        helps = {p.arg_name: p.description for p in parsed.params} if parsed else {}

        params = []
        for name, param in inspect.signature(command).parameters.items():
            required = param.default is inspect.Parameter.empty
            params.append(CommandParameter(name, _unwrap_optional(param.annotation), required,
                                           None if required else param.default, helps.get(name) or ''))
        return {
            'name': command.__name__,
            'description': parsed.short_description if parsed else '',
            'parameters': params,
        }

    def build_parser(self, prog: Optional[str] = None, description: Optional[str] = None) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog=prog, description=description)
        subparsers = parser.add_subparsers(dest='command', required=True)
        for command in self.commands.values():
            info = command['info']
            sub = subparsers.add_parser(info['name'], help=info['description'], description=info['description'])
            for param in info['parameters']:
                if param.type_ is bool:
                    sub.add_argument(param.flag, dest=param.name, action='store_true', help=param.help or param.name)
                    continue
                mapped_type = TYPE_MAPPING.get(param.type_)
                if not mapped_type:
                    raise ValueError(f'Unknown type: {param.type_}')
                sub.add_argument(param.flag, dest=param.name, type=mapped_type, required=param.required,
                                 default=param.default, help=param.help or param.name)
        return parser

    def run_command(self, name: str, arguments: argparse.Namespace):
        command = self.commands[name]
        kwargs = {p.name: getattr(arguments, p.name) for p in command['info']['parameters']}
        return command['obj'](**kwargs)

    def names(self) -> List[str]:
        return list(self.commands)
