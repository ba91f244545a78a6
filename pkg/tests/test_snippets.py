# -*- coding: utf-8 -*-
"""工具函数：有序并行、json输出、表格
"""

import logging
import numpy as np
import pytest
from copula4probit.snippets import ordered_map, to_builtin, dumps
from copula4probit.snippets import write_jsonl, read_jsonl, format_table
from copula4probit.snippets import check_finite, DomainError, Progress


def _square_or_fail(i):
    if i == 3:
        raise ValueError('three')
    return i * i


def test_ordered_map_keeps_order_and_exceptions():
    results = ordered_map(_square_or_fail, range(6))
    assert results[:3] == [0, 1, 4]
    assert isinstance(results[3], ValueError)
    assert results[4:] == [16, 25]


def test_to_builtin():
    record = {'a': np.float64(1.5), 'b': np.arange(3), 'c': np.nan,
              1: np.bool_(True), 'd': (np.int64(2),)}
    assert to_builtin(record) == {'a': 1.5, 'b': [0, 1, 2], 'c': None,
                                  '1': True, 'd': [2]}
    assert dumps({'b': 1, 'a': 2}) == '{"a": 2, "b": 1}'


def test_jsonl_round_trip(tmp_path):
    path = str(tmp_path / 'out.jsonl')
    write_jsonl(path, [{'x': np.float32(0.25)}, {'y': [1, 2]}])
    assert read_jsonl(path) == [{'x': 0.25}, {'y': [1, 2]}]


def test_format_table():
    text = format_table(['', 'ATE'], [['Bias', 0.01234]], 'title')
    lines = text.splitlines()
    assert lines[0] == 'title'
    assert '0.0123' in text


def test_check_finite():
    assert check_finite('x', [1., 2.]).dtype == float
    with pytest.raises(DomainError):
        check_finite('x', [1., np.inf])


def test_ordered_map_same_result_with_workers():
    serial = ordered_map(_square_or_fail, range(9))
    parallel = ordered_map(_square_or_fail, range(9), workers=3)
    assert [r for r in parallel if not isinstance(r, Exception)] == \
        [r for r in serial if not isinstance(r, Exception)]
    assert isinstance(parallel[3], ValueError)


def test_progress_logs_on_period(caplog):
    progress = Progress(5, period=2, desc='reps')
    with caplog.at_level(logging.INFO, logger='copula4probit'):
        assert list(progress.wrap('abcde')) == list('abcde')
    messages = [r.getMessage() for r in caplog.records]
    assert len(messages) == 3
    assert messages[-1].startswith('reps: 5/5 done')
