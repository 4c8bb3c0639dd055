import csv
import os
from icecream import ic

ic.configureOutput(prefix="windcast | ", includeContext=False)
ic.disable()


def set_verbose(enabled):
    """Switch the console trace on or off for the whole process."""
    if enabled:
        ic.enable()
    else:
        ic.disable()


def trace(*values):
    """Emit a diagnostic line through icecream when verbose output is on."""
    return ic(*values)


class CSVLogger:
    """Row-oriented CSV writer used for every tabular run artifact.

    The header is taken from the keys of the first logged row.

    Parameters
    ----------
    filename : str
        Destination path. Missing parent directories are created.
    """

    def __init__(self, filename):
        self.filename = filename
        self.ensure_directories_exist(self.filename)
        self.file = open(self.filename, "w", newline="")
        self.header_written = False
        self.file_open = True
        self.writer = csv.writer(self.file, lineterminator="\n")

    def log(self, data):
        if not self.file_open:
            raise RuntimeError(f"Cannot log to closed file '{self.filename}'")
        # If the file is new (or empty), write the headers (dictionary keys)
        if not self.header_written:
            self.writer.writerow(data.keys())
            self.header_written = True
        self.writer.writerow([format_cell(v) for v in data.values()])

    def flush(self):
        """Ensures that data is written to the file."""
        self.file.flush()

    def close(self):
        if self.file_open:
            self.flush()
            self.file.close()
            self.file_open = False

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    @staticmethod
    def ensure_directories_exist(file_path):
        directory = os.path.dirname(file_path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)


def format_cell(value):
    # repr keeps full float precision so reruns are byte-identical
    if isinstance(value, float):
        return repr(float(value))
    if hasattr(value, "item"):
        return format_cell(value.item())
    return value


def write_table(filename, columns):
    """Write equally long named columns to ``filename``.

    Parameters
    ----------
    filename : str
        Destination CSV path.
    columns : dict
        Mapping of column name to a sequence of values.
    """
    names = list(columns)
    lengths = {len(columns[name]) for name in names}
    if len(lengths) > 1:
        raise ValueError(f"Columns of unequal length for '{filename}': {sorted(lengths)}")
    with CSVLogger(filename) as logger:
        for row in zip(*(columns[name] for name in names)):
            logger.log(dict(zip(names, row)))
