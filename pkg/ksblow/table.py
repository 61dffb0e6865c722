import csv, io, json, math
import prettytable
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping

import numpy as np

from ksblow.logging import BOLD, RESET, BLUE, RED, YELLOW
from ksblow.types import Status, Verdict

class Format(Enum):
    FLOAT = 1
    STATUS = 2
    VERDICT = 3

@dataclass
class Field:
    name: str
    format: Format | None = None
    visible: bool = True

STATUS_COLOURS = {
    Status.PASS: BLUE,
    Status.FAIL: RED,
    Status.UNKNOWN: YELLOW,
}

VERDICT_COLOURS = {
    Verdict.FINITE_TIME_BLOWUP: RED,
    Verdict.INFINITE_TIME_BLOWUP_CANDIDATE: YELLOW,
    Verdict.BOUNDED_CANDIDATE: BLUE,
    Verdict.INCONCLUSIVE: YELLOW,
    Verdict.ERROR: RED,
}

def boldify(text: str) -> str:
    ''' Format text with bold. '''
    return f'{BOLD}{text}{RESET}'

def colourify(text: str, colour: str) -> str:
    return f'{colour}{text}{RESET}'

def string_format() -> Callable[[str, Any], str]:
    def _string_format(_field, val: Any) -> str:
        return str(val) if val is not None else ''
    return _string_format

def float_format(precision: int) -> Callable[[str, Any], str]:
    def _float_format(_field, val: float | None) -> str:
        if val is None:
            return ''
        return f'{val:.{precision}g}' if math.isfinite(val) else str(val)
    return _float_format

def enum_format(colours: Mapping[Enum, str]) -> Callable[[str, Any], str]:
    def _enum_format(_field, val: Enum | None) -> str:
        return colourify(val.value, colours.get(val, '')) if isinstance(val, Enum) else ''
    return _enum_format


class JSONEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, Enum):
            return obj.value
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        return super().default(obj)


def to_json_string(obj: Any) -> str:
    return json.dumps(obj, indent=4, separators=(',', ': '), sort_keys=True, cls=JSONEncoder)


class Table(prettytable.PrettyTable):
    def __init__(self, fields: Sequence[Field], **kwargs) -> None:
        super().__init__([field.name for field in fields], **kwargs)

        # Table styling
        self.hrules = prettytable.ALL
        self.vrules = prettytable.FRAME
        self.padding_width = 1
        self.set_style(prettytable.SINGLE_BORDER)

        self.__fields = fields

    def __bool__(self) -> bool:
        return len(self.rows) > 0

    def get_csv_string(self, **kwargs) -> str:
        options = self._get_options(kwargs)
        csv_options = {key: value for key, value in kwargs.items() if key not in options}
        csv_buffer = io.StringIO()
        csv_writer = csv.writer(csv_buffer, **csv_options)

        if options.get('header'):
            csv_writer.writerow([field.name for field in self.__fields])

        for row in self._get_rows(options):
            csv_writer.writerow([self._plain(value) for value in row])

        return csv_buffer.getvalue()

    def get_json_string(self, **kwargs) -> str:
        options = self._get_options(kwargs)
        json_options: Any = {'indent': 4, 'separators': (',', ': '), 'sort_keys': True, 'cls': JSONEncoder}
        json_options.update({key: value for key, value in kwargs.items() if key not in options})
        objects: list[Any] = []

        field_names = [field.name for field in self.__fields]

        if options.get('header'):
            objects.append(field_names)

        for row in self._get_rows(options):
            objects.append(dict(zip(field_names, row, strict=False)))

        return json.dumps(objects, **json_options)

    def to_string(self) -> str:
        self._set_fields_names(bold_text=True)
        self._set_fields_format()

        fields = [field.name for field in self.__fields if field.visible]
        table_str = self.get_formatted_string(fields=fields)

        return f'\n{table_str}\n'

    @staticmethod
    def _plain(value: Any) -> Any:
        if value is None:
            return ''
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, float):
            return repr(value)
        return value

    def _set_fields_names(self, bold_text: bool) -> None:
        for field in self.__fields:
            if bold_text:
                field.name = boldify(field.name)

        self.field_names = [field.name for field in self.__fields]

    def _set_fields_format(self) -> None:
        for field in self.__fields:
            match field.format:
                case Format.FLOAT:
                    self.custom_format[field.name] = float_format(6)
                    self.align[field.name] = 'r'
                case Format.STATUS:
                    self.custom_format[field.name] = enum_format(STATUS_COLOURS)
                    self.align[field.name] = 'l'
                case Format.VERDICT:
                    self.custom_format[field.name] = enum_format(VERDICT_COLOURS)
                    self.align[field.name] = 'l'
                case _:
                    self.custom_format[field.name] = string_format()
                    self.align[field.name] = 'l'
