import os, sys
"""
只在当前 Python 进程中有效（即运行时有效）
以下路径加入 sys.path 后，各包内模块统一用以下方式导入：
1. core / utils 从项目根导入，例如：from core.symbolic_core import Expr
2. framework 下的包直接用包名，例如：from model import Report，from control.scenarios import SCENARIOS
注意：同一模块必须始终用同一种方式导入，否则会被加载两次（例如 model.models 与 framework.model.models）
"""
project_root = os.path.abspath(os.path.dirname(__file__))
sys.path.extend([
    project_root,
    os.path.join(project_root, 'framework'),
    os.path.join(project_root, 'utils'),
    os.path.join(project_root, 'core'),
])

import signal

from utils.ProcessTerminator import ProcessTerminator
from view import cli


def handle_ctrl_c(signum, frame):
    print("接收到 Ctrl+C，结束子进程后退出。", file=sys.stderr)
    ProcessTerminator.terminate_children()
    sys.exit(cli.EXIT_INTERRUPTED)


if __name__ == "__main__":
    signal.signal(signal.SIGINT, handle_ctrl_c)
    sys.exit(cli.main())
