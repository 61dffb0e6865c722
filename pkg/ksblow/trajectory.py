import csv
from collections.abc import Callable, Iterable, Sequence
from dataclasses import replace
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ksblow.diagnostics import DiagnosticsRecord
from ksblow.exceptions import KsblowError
from ksblow.table import Field, Format, Table

if TYPE_CHECKING:
    from ksblow.solver import RadialState

# Fixed header of the time series
SERIES_FIELDS = ('t', 'dt', 'mass_u', 'mass_v', 'linf_u', 'F', 'D', 'norm_f', 'norm_g', 'ratio36', 'Bhat')
SNAPSHOT_FIELDS = ('r', 'u', 'v')


def multifilter(filters: Sequence[Callable] | None, iterable: Iterable) -> Iterable:
    return iterable if not filters else filter(lambda x: all(f(x) for f in filters), iterable)


class Trajectory:
    '''
    Diagnostics records of one run in time order. Appending a record fills in the energy identity
    residual against the previous one.
    '''

    def __init__(self, records: Sequence[DiagnosticsRecord] | None = None) -> None:
        self._records: list[DiagnosticsRecord] = []
        for r in records or []:
            self.append(r)

    def __len__(self) -> int:
        return len(self._records)

    def __getitem__(self, index):
        return self._records[index]

    def __iter__(self):
        return iter(self._records)

    @property
    def records(self) -> Sequence[DiagnosticsRecord]:
        return self._records

    @property
    def last(self) -> DiagnosticsRecord:
        return self._records[-1]

    def append(self, r: DiagnosticsRecord) -> None:
        if self._records:
            prev = self._records[-1]
            if r.t < prev.t:
                raise KsblowError(f'Record at t = {r.t} precedes the last one at t = {prev.t}')
            if r.t > prev.t:
                residual = abs((r.F - prev.F) / (r.t - prev.t) + 0.5 * (r.D + prev.D))
                r = replace(r, dFdt_residual=residual)
        self._records.append(r)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self._records])

    @property
    def times(self) -> np.ndarray:
        return self.column('t')

    @property
    def linf(self) -> np.ndarray:
        return self.column('linf_u')

    def get_table(self, filters: Sequence[Callable] | None = None) -> Table:
        table = Table([
            Field('t', Format.FLOAT),
            Field('dt', Format.FLOAT),
            Field('mass_u', Format.FLOAT),
            Field('linf_u', Format.FLOAT),
            Field('F', Format.FLOAT),
            Field('D', Format.FLOAT),
            Field('ratio36', Format.FLOAT),
            Field('Bhat', Format.FLOAT),
        ])

        for r in multifilter(filters, self._records):
            table.add_row([r.t, r.dt, r.mass_u, r.linf_u, r.F, r.D, r.ratio36, r.Bhat])

        return table

    def write_csv(self, path: Path) -> None:
        with open(path, 'w', newline='', encoding='utf-8') as file:
            writer = csv.writer(file)
            writer.writerow(SERIES_FIELDS)
            for r in self._records:
                writer.writerow([repr(float(getattr(r, name))) for name in SERIES_FIELDS])

    @classmethod
    def read_csv(cls, path: Path) -> 'Trajectory':
        with open(path, newline='', encoding='utf-8') as file:
            reader = csv.DictReader(file)
            if tuple(reader.fieldnames or ()) != SERIES_FIELDS:
                raise KsblowError(f'{path}: expected header {",".join(SERIES_FIELDS)}, got {",".join(reader.fieldnames or ())}')
            try:
                records = [DiagnosticsRecord(**{name: float(row[name]) for name in SERIES_FIELDS}) for row in reader]
            except ValueError as e:
                raise KsblowError(f'{path}: {e} on row {reader.line_num}')
        return cls(records)


def write_snapshot(path: Path, state: 'RadialState') -> None:
    ''' One row (r_i, u_i, v_i) per cell. '''
    with open(path, 'w', newline='', encoding='utf-8') as file:
        writer = csv.writer(file)
        writer.writerow(SNAPSHOT_FIELDS)
        for r, u, v in zip(state.mesh.centers, state.u.values, state.v.values):
            writer.writerow([repr(float(r)), repr(float(u)), repr(float(v))])
