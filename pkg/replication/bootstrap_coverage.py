#! -*- coding: utf-8 -*-
# bootstrap覆盖率脚本：每次模拟做B次加权bootstrap，统计区间覆盖率

import os
from copula4probit import __version__
from copula4probit.simulation import load_scenario, run_bootstrap_coverage
from copula4probit.snippets import setup_logging, write_jsonl

scenario_path = os.path.join(os.path.dirname(__file__), 'presets',
                             'bootstrap_coverage.json')

# 其他配置
simulations = 200  # 冒烟测试可以设为50
boot = 200  # 冒烟测试可以设为100
level = 0.95
weight_law = 'exp'  # exp 或 gamma，均值都为1
seed = 0
workers = os.cpu_count() or 1
output_path = 'bootstrap_coverage.jsonl'

setup_logging()

scenario = load_scenario(scenario_path, replications=simulations, boot=boot,
                         seed=seed)
summary = run_bootstrap_coverage(scenario, level, weight_law, workers)
print(summary.format())

records = [{'type': 'config', 'version': __version__,
            'scenario': scenario.to_dict()}]
write_jsonl(output_path, records + summary.records())
