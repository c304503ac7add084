class HbDiffException(Exception):
    """Base class of every error raised by hbdiff.

    `exit_code` is the process status the command line reports when the
    error reaches it.
    """
    exit_code = 1
