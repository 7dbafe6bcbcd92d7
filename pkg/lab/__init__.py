"""
csslab: 比较型语义安全(CSS)与不可区分性(IND)的博弈实验室

在 CPA/CCA1/CCA2 三种攻击模型下运行 IND 与 CSS 实验，
统计/精确估计敌手优势，并把两个方向的敌手构造做成可执行的变换。
"""

__version__ = "1.0.0"

# 报告格式版本，字段变化时递增
SCHEMA_VERSION = "1"
