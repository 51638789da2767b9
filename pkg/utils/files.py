import json
import os
import tempfile
import pandas as pd


def _atomic_write(path, write):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.tmp-', suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'w', newline='') as handle:
            write(handle)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def write_csv_atomic(frame: pd.DataFrame, path: str) -> str:
    """Write a DataFrame as CSV through a temp file and rename"""
    _atomic_write(path, lambda handle: frame.to_csv(handle, index=False, lineterminator='\n'))
    return path


def write_json_atomic(data, path: str) -> str:
    _atomic_write(path, lambda handle: json.dump(data, handle, indent=2, sort_keys=True))
    return path


def write_text_atomic(text: str, path: str) -> str:
    _atomic_write(path, lambda handle: handle.write(text))
    return path
