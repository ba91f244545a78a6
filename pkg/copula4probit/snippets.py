#! -*- coding: utf-8 -*-
# 代码合集：异常类型、进度显示、并行执行、结果输出

import json
import logging
import queue
import time
import numpy as np
from copula4probit.backend import default_loglevel


class DomainError(ValueError):
    """参数越界、NaN输入、维度不符、非正权重等
    """


class DataError(ValueError):
    """数据集本身的问题：缺列、非0/1取值、缺失值、y或d为常数
    """


class NoRootError(ValueError):
    """求根目标不可达
    """


class ConvergenceError(RuntimeError):
    """所有起点均失败，或失败次数超过容许比例
    """


class IdentificationWarning(UserWarning):
    """没有变化的工具变量时，δ₁与ρ可能无法区分
    """


def setup_logging(level=None):
    """按环境变量COPULA4PROBIT_LOGLEVEL配置根logger
    """
    level = level or default_loglevel
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def check_finite(name, x):
    """NaN/inf一律拒绝
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError('%s contains NaN or infinite values' % name)
    return x


class Progress(object):
    """按固定周期把完成数写进日志，Monte Carlo与bootstrap共用
    """
    def __init__(self, total, period=1, desc=None):
        self.total = total
        self.period = max(int(period), 1)
        self.desc = desc or 'tasks'
        self.done = 0
        self.start = time.time()
        self.logger = logging.getLogger('copula4probit')

    def update(self, k=1):
        for _ in range(k):
            self.done += 1
            if self.done % self.period == 0 or self.done == self.total:
                self.logger.info('%s: %d/%d done (%.1fs)', self.desc,
                                 self.done, self.total,
                                 time.time() - self.start)

    def wrap(self, iterable):
        for item in iterable:
            yield item
            self.update()


class _Indexed(object):
    """给任务带上序号；func的异常作为结果返回
    """
    def __init__(self, func):
        self.func = func

    def __call__(self, item):
        i, d = item
        try:
            return i, self.func(d)
        except Exception as e:
            return i, e


def _worker_step(task, in_queue, out_queue):
    while True:
        out_queue.put(task(in_queue.get()))


def parallel_apply(task, items, workers, progress=None):
    """多进程地对(序号, 输入)执行task，返回无序的(序号, 结果)列表。
    输入队列长度为2*workers，队列满时先收取已完成的结果。
    """
    from multiprocessing import Pool, Queue

    in_queue, out_queue = Queue(2 * workers), Queue()

    pool = Pool(workers, _worker_step, (task, in_queue, out_queue))
    results = []

    def drain(block=False):
        got = 0
        while True:
            try:
                results.append(out_queue.get(block=block and got == 0))
            except queue.Empty:
                break
            got += 1
        if progress is not None:
            progress.update(got)
        return got

    for item in items:
        while True:
            try:
                in_queue.put(item, block=False)
                break
            except queue.Full:
                drain(block=True)
        drain()

    while len(results) < len(items):
        drain(block=True)

    pool.terminate()
    return results


def ordered_map(func, iterable, workers=1, desc=None, period=10):
    """按输入顺序返回func的结果，与进程数无关；异常以结果形式返回。
    workers<=1时直接顺序执行。
    """
    items = list(enumerate(iterable))
    task = _Indexed(func)
    progress = Progress(len(items), period, desc)
    if workers is None or workers <= 1 or len(items) <= 1:
        results = [task(item) for item in progress.wrap(items)]
    else:
        results = parallel_apply(task, items, workers, progress)
    results = sorted(results, key=lambda r: r[0])
    return [r for _, r in results]


def to_builtin(x):
    """numpy类型转为可json序列化的python内置类型
    """
    if isinstance(x, dict):
        return {str(k): to_builtin(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_builtin(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_builtin(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(record):
    """稳定的单行json：键排序，浮点数用repr
    """
    return json.dumps(to_builtin(record), sort_keys=True, ensure_ascii=False)


def write_jsonl(path, records, mode='w'):
    """逐行写入json记录
    """
    with open(path, mode, encoding='utf-8') as f:
        for record in records:
            f.write(dumps(record) + '\n')


def read_jsonl(path):
    with open(path, encoding='utf-8') as f:
        return [json.loads(l) for l in f if l.strip()]


def format_table(headers, rows, title=None, floatfmt='%.4f'):
    """对齐的纯文本表格
    """
    def fmt(v):
        if isinstance(v, (float, np.floating)):
            return floatfmt % v
        return str(v)

    cells = [[str(h) for h in headers]] + [[fmt(v) for v in r] for r in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(headers))]
    lines = []
    if title:
        lines.append(title)
    sep = '  '.join('-' * w for w in widths)
    lines.append(sep)
    for i, r in enumerate(cells):
        first = r[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append('  '.join([first] + rest))
        if i == 0:
            lines.append(sep)
    lines.append(sep)
    return '\n'.join(lines)
