#! -*- coding: utf-8 -*-
# Monte Carlo脚本：按预设跑一组场景，输出表格和jsonl

import os
from copula4probit import __version__
from copula4probit.simulation import load_scenario, run_monte_carlo
from copula4probit.simulation import format_summary, summary_records
from copula4probit.snippets import setup_logging, write_jsonl

# 场景：内置预设名或presets/下的json文件
scenarios = [
    'table1-gaussian',
    'table2-gaussian',
]

# 其他配置
n = 500  # 改为1000即为大样本版本
replications = 200  # 完整规模为2000
seed = 0
workers = os.cpu_count() or 1
output_path = 'monte_carlo.jsonl'

setup_logging()

records = []
for name in scenarios:
    scenario = load_scenario(name, n=n, replications=replications, seed=seed)
    summary = run_monte_carlo(scenario, workers=workers)
    print(format_summary(summary))
    print()
    records.append({'type': 'config', 'version': __version__,
                    'scenario': scenario.to_dict()})
    records.extend(summary_records(summary))

write_jsonl(output_path, records)
