"""ISO-8601 durations and datetimes as integer milliseconds."""

from __future__ import annotations

import re
from datetime import datetime, timedelta, timezone

_DURATION = re.compile(
    r"P(?:(?P<d>\d+)D)?"
    r"(?:T(?:(?P<h>\d+)H)?(?:(?P<m>\d+)M)?(?:(?P<s>\d+)(?:\.(?P<frac>\d{1,3}))?S)?)?"
)

_DATETIME = re.compile(
    r"(?P<date>\d{4}-\d{2}-\d{2})[T ](?P<h>\d{2}):(?P<m>\d{2})(?::(?P<s>\d{2})(?:\.(?P<frac>\d{1,9}))?)?"
    r"(?P<tz>Z|[+-]\d{2}:?\d{2})?"
)

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class TimeFormatError(ValueError):
    pass


def parse_duration(text: str) -> int:
    """``PnDTnHnMnS`` to milliseconds.  Years, months and weeks are rejected."""
    if text.startswith("P") and any(c in text[1:].split("T", 1)[0] for c in "YMW"):
        raise TimeFormatError(f"calendar-dependent duration {text!r} is not supported")
    m = _DURATION.fullmatch(text)
    if not m or text in ("P", "PT") or text.endswith("T"):
        raise TimeFormatError(f"malformed duration {text!r}")
    d, h, mi, s = (int(m.group(k) or 0) for k in "dhms")
    ms = int((m.group("frac") or "").ljust(3, "0"))
    total = (((d * 24 + h) * 60 + mi) * 60 + s) * 1000 + ms
    if total <= 0:
        raise TimeFormatError(f"duration {text!r} must be positive")
    return total


def format_duration(ms: int) -> str:
    if ms <= 0:
        raise ValueError("durations are positive")
    secs, frac = divmod(ms, 1000)
    days, secs = divmod(secs, 86400)
    hours, secs = divmod(secs, 3600)
    minutes, secs = divmod(secs, 60)
    out = "P"
    if days:
        out += f"{days}D"
    timepart = ""
    if hours:
        timepart += f"{hours}H"
    if minutes:
        timepart += f"{minutes}M"
    if secs or frac:
        timepart += f"{secs}.{frac:03d}S" if frac else f"{secs}S"
    if timepart:
        out += "T" + timepart
    return out


def parse_datetime(text: str) -> int:
    """ISO-8601 datetime with an explicit offset to epoch milliseconds (UTC)."""
    m = _DATETIME.fullmatch(text)
    if not m:
        raise TimeFormatError(f"malformed datetime {text!r}")
    tz = m.group("tz")
    if tz is None:
        raise TimeFormatError(f"datetime {text!r} has no UTC offset")
    try:
        day = datetime.strptime(m.group("date"), "%Y-%m-%d")
    except ValueError as e:
        raise TimeFormatError(f"malformed datetime {text!r}: {e}") from None
    h, mi, s = int(m.group("h")), int(m.group("m")), int(m.group("s") or 0)
    if h > 23 or mi > 59 or s > 59:
        raise TimeFormatError(f"malformed time of day in {text!r}")
    if tz == "Z":
        offset = 0
    else:
        sign = -1 if tz[0] == "-" else 1
        digits = tz[1:].replace(":", "")
        offset = sign * (int(digits[:2]) * 60 + int(digits[2:]))
    ms = int((m.group("frac") or "")[:3].ljust(3, "0"))
    local = day.replace(tzinfo=timezone.utc) + timedelta(hours=h, minutes=mi, seconds=s)
    delta = local - _EPOCH - timedelta(minutes=offset)
    return (delta.days * 86400 + delta.seconds) * 1000 + ms


def format_instant(ms: int) -> str:
    """Epoch milliseconds to ``YYYY-MM-DDTHH:MM:SS.mmmZ``."""
    dt = _EPOCH + timedelta(milliseconds=ms)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ms % 1000:03d}Z"
