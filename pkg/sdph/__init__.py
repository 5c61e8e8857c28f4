"""The main entry point to the sdph package.

run(argv) -> Result
    Runs one sdph command, capturing its error
main()
    Console entry point: prints the JSON summary and exits with the
    error category's code
"""
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence
from typing import TypedDict

from sdph import builtin, lang
from sdph import cli


class Result(TypedDict):
    """What a command run produced"""
    outputs: List[str]  # files written
    summary: Dict[str, Any]  # the JSON summary line
    error: Optional[builtin.SDPHError]  # error that stopped the command


__version__ = '0.1.0'
VERSION = f"sdph {__version__}"
LOG_FILE = 'sdph.log'


def logException(msg="Unexpected error has occurred") -> None:
    """Helper function that logs unexpected (Python) exceptions.
    If logException is invoked, sdph has hit an error it should not have.
    """
    logging.exception(msg)
    print("sdph ERROR: " + msg, file=sys.stderr)
    print(f"The details of this error have been logged in {LOG_FILE}.",
          file=sys.stderr)


def report(err: builtin.SDPHError) -> None:
    errType = type(err).__name__ + ':'
    print(errType, err.report(), file=sys.stderr)


def run(argv: Optional[Sequence[str]] = None) -> Result:
    """Executes the command named by argv."""
    result: Result = {
        'outputs': [],
        'summary': {},
        'error': None,
    }
    try:
        summary = cli.execute(argv, __version__)
    except builtin.SDPHError as err:
        result['error'] = err
        return result
    except Exception:
        logException()
        result['error'] = builtin.NumericError(f"unexpected error, see {LOG_FILE}")
        return result
    result['summary'] = summary
    result['outputs'] += summary['outputs']
    return result


def errorSummary(err: builtin.SDPHError) -> Dict[str, Any]:
    summary: Dict[str, Any] = {
        'error': type(err).__name__,
        'message': err.msg(),
    }
    if isinstance(err, builtin.FormatError):
        summary.update(file=err.file, line=err.line)
    elif isinstance(err, builtin.ConfigError):
        summary.update(key=err.key)
    return summary


def main(argv: Optional[Sequence[str]] = None) -> None:
    """This is the entry point which shell scripts should invoke.

    Exit codes: 0 on success, 1 on invalid input or configuration,
    2 on numeric failure or an unexpected error.
    """
    logging.basicConfig(
        filename=LOG_FILE,
        filemode='w',
        format='%(name)s - %(levelname)s - %(message)s',
    )
    result = run(argv)
    err = result['error']
    if err is None:
        print(json.dumps(result['summary'], sort_keys=True))
        sys.exit(0)
    report(err)
    print(json.dumps(errorSummary(err), sort_keys=True))
    sys.exit(err.exitCode)
