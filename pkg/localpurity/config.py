"""
配置加载
config/config.json 覆盖内置默认值；命令行参数再覆盖配置文件
"""

import json
import os
from typing import Dict, Optional, Tuple

from localpurity.common import get_config_directory

DEFAULT_CONFIG = {
    "delta": 0.1,
    "epsilon": 0.25,
    "seed": 7,
    "restarts": 32,
    "max_iters": 500,
    "grad_tol": 1e-7,
    "tol": 1e-9,
    "workers": 1,
    "dense_guard": 4096,
    "typical_guard": 1 << 20,
    "covering_guard": 1 << 16,
    "covering_dense_guard": 256,
    "classical_guard": 1 << 24,
    "oracle_resolution": 64,
    "suite_count": 1000,
    "log_to_file": True,
}


def load_config(config_path: Optional[str] = None) -> Tuple[Dict, str]:
    """
    加载配置文件
    :param config_path: 配置文件路径，默认 config/config.json
    :return: (config_dict, error_msg)
    """
    config_path = config_path or os.path.join(get_config_directory(), "config.json")
    config = dict(DEFAULT_CONFIG)

    if not os.path.exists(config_path):
        # 返回默认配置
        return config, ""

    try:
        with open(config_path, "rb") as f:
            config_str = f.read().decode("utf-8")
        loaded = json.loads(config_str)
    except json.JSONDecodeError as e:
        return config, f"config.json 格式错误: {e}"
    except Exception as e:
        return config, f"读取配置失败: {e}"

    if not isinstance(loaded, dict):
        return config, "config.json 顶层必须是对象"

    unknown = sorted(set(loaded) - set(DEFAULT_CONFIG))
    config.update({k: v for k, v in loaded.items() if k in DEFAULT_CONFIG})
    if unknown:
        return config, f"config.json 包含未知字段: {', '.join(unknown)}"
    return config, ""
