import argparse
import asyncio
import signal
import sys
from pathlib import Path

from config.settings import settings
from toolkit.presets import PRESETS
from toolkit.runner import RunResult, run_scenario
from toolkit.scenario import Scenario, load_scenario, preset_scenario
from toolkit.verify import all_passed, verify_run
from utils.errors import ConleyIFSError
from utils.logger import log


def _scenario(args) -> Scenario:
    """A scenario file, or the bare name of a bundled preset."""
    target = args.scenario
    if not Path(target).exists() and target in PRESETS:
        scenario = preset_scenario(target)
    else:
        scenario = load_scenario(target)
    return scenario.with_overrides(output_dir=args.out, seed=args.seed)


async def runner(args) -> int:
    scenario = _scenario(args)
    job = asyncio.create_task(run_scenario(scenario, threads=args.threads), name=f"Run:{scenario.name}")
    try:
        result: RunResult = await job
    except asyncio.CancelledError:
        log.info("[Main] run cancelled, partial outputs kept")
        return 130

    if args.command == "verify":
        outcomes = verify_run(result)
        failed = [o for o in outcomes if o.passed is False]
        print(f"{scenario.name}: {len(outcomes) - len(failed)}/{len(outcomes)} check(s) passed or not applicable")
        for o in failed:
            print(f"  FAIL {o.name}: {o.detail}")
        return 0 if all_passed(outcomes) else 1

    print(f"{scenario.name}: outputs in {result.output_dir}")
    for name in result.tasks:
        status = result.status.get(name, "skipped")
        error = result.errors.get(name)
        print(f"  {name:<11} {status}" + (f"  ({error})" if error else ""))
    return 0 if result.ok else 1


def _kill(loop: asyncio.AbstractEventLoop):
    for task in asyncio.all_tasks(loop):
        task.cancel()


def _print_presets() -> int:
    for name, preset in sorted(PRESETS.items()):
        print(f"{name:<24} {preset.description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conley-ifs",
                                     description="Conley attractors, repellers and chain recurrence of IFSs on cell grids")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run a scenario"), ("verify", "run a scenario and check it; exit 1 on failure")):
        p = sub.add_parser(name, help=text)
        p.add_argument("scenario", help="scenario JSON file or preset name")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="random seed")
        p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default CONLEY_IFS_THREADS={settings.THREADS})")
    sub.add_parser("presets", help="list bundled presets")
    return parser


def cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        return _print_presets()

    # 이벤트 루프 생성 및 설정
    loop = asyncio.new_event_loop()
    asyncio.set_event_loop(loop)

    # 시그널 핸들러 등록
    for sig in (signal.SIGINT, signal.SIGTERM):
        loop.add_signal_handler(sig, lambda: _kill(loop))

    try:
        return loop.run_until_complete(runner(args))
    except ConleyIFSError as exc:
        log.error(f"[Main] {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        loop.close()


if __name__ == '__main__':
    sys.exit(cli())
