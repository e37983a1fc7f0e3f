"""
运行报告：JSON / CSV 输出
"""

import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from localpurity.common import TOLERANCE_POLICY, ValidationError


class ReportFormat(Enum):
    JSON = "json"
    CSV = "csv"


CSV_FIELDS = ["name", "value", "bound", "tolerance"]


def file_digest(path: str) -> str:
    """输入文件的 sha256"""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _plain(obj: Any) -> Any:
    """numpy 标量/数组转为 JSON 可序列化对象"""
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return [[float(z.real), float(z.imag)] for z in obj.ravel()]
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Enum):
        return obj.value
    raise TypeError(f"无法序列化 {type(obj).__name__}")


@dataclass
class ResultRow:
    name: str
    value: Any
    bound: Optional[float] = None
    tolerance: Optional[float] = None


@dataclass
class RunReport:
    """
    一次命令运行的报告
    results 为扁平的 name -> value，details 保存各模块 to_dict() 的完整输出
    """

    command: str
    seed: Optional[int] = None
    inputs: Dict[str, str] = field(default_factory=dict)
    rows: List[ResultRow] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)
    timing: Optional[float] = None

    def add(self, name: str, value, bound: Optional[float] = None, tolerance: Optional[float] = None):
        self.rows.append(ResultRow(name, value, bound, tolerance))
        return self

    def add_input(self, name: str, path: str):
        self.inputs[name] = path
        self.inputs[f"{name}Sha256"] = file_digest(path)

    @property
    def results(self) -> Dict[str, Any]:
        return {r.name: r.value for r in self.rows}

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "seed": self.seed,
            "inputs": self.inputs,
            "results": self.results,
            "bounds": {r.name: r.bound for r in self.rows if r.bound is not None},
            "tolerances": dict(TOLERANCE_POLICY),
            "details": self.details,
        }
        if self.timing is not None:
            out["timing"] = {"seconds": self.timing}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, default=_plain) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for r in self.rows:
            writer.writerow(
                {
                    "name": r.name,
                    "value": _plain(r.value) if isinstance(r.value, np.generic) else r.value,
                    "bound": "" if r.bound is None else r.bound,
                    "tolerance": "" if r.tolerance is None else r.tolerance,
                }
            )
        return buf.getvalue()

    def render(self, fmt) -> str:
        fmt = ReportFormat(fmt)
        return self.to_json() if fmt is ReportFormat.JSON else self.to_csv()


def write_report(report: RunReport, out_path: Optional[str] = None, fmt="json") -> None:
    """
    写出报告
    :param out_path: 输出文件，缺省写 stdout
    :param fmt: json 或 csv
    """
    try:
        text = report.render(fmt)
    except ValueError as e:
        raise ValidationError(f"不支持的报告格式: {fmt}") from e
    if out_path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    dir_path = os.path.dirname(os.path.abspath(out_path))
    os.makedirs(dir_path, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=dir_path, suffix=".tmp", prefix=".report_")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_path, out_path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise
    logging.info(f"报告已写入 {out_path}")
