import sys
from common.logger import Logger
from lab.cli_harness import main


if __name__ == '__main__':
    # 初始化日志
    Logger()

    # 使用命令的退出码退出
    sys.exit(main())
