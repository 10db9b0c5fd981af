"""Reference implementations used as test oracles.

Nothing here imports the package under test, and nothing relies on the
standard library module that the package itself uses for the same job.
"""

import calendar

_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/"
_VALUE = {c: i for i, c in enumerate(_ALPHABET)}


def b64decode_bits(text):
    """Decode base64 by concatenating 6-bit groups and cutting whole bytes.

    Trailing bits that do not fill a byte are dropped, as RFC 4648 decoders do.
    """
    text = text.rstrip("=")
    bits = "".join(format(_VALUE[c], "06b") for c in text)
    usable = len(bits) - len(bits) % 8
    return bytes(int(bits[i : i + 8], 2) for i in range(0, usable, 8))


def b64encode_bits(data):
    bits = "".join(format(b, "08b") for b in data)
    bits += "0" * (-len(bits) % 6)
    out = "".join(_ALPHABET[int(bits[i : i + 6], 2)] for i in range(0, len(bits), 6))
    return out + "=" * (-len(out) % 4)


def le32(value, signed=True):
    return value.to_bytes(4, "little", signed=signed)


def simple_poi_bytes(lon, lat, name):
    """Type 2 record laid out field by field."""
    raw = name.encode("utf-8") if isinstance(name, str) else name
    total = 1 + 4 + 4 + 4 + len(raw) + 1
    return bytes([2]) + le32(total, signed=False) + le32(lon) + le32(lat) + raw + b"\x00"


def skipper_bytes(region_len, west, south, east, north):
    return bytes([1]) + le32(region_len, signed=False) + b"".join(le32(v) for v in (west, south, east, north))


def civil_from_unix(seconds):
    days, secs = divmod(seconds, 86400)
    # days since 1970-01-01 to (y, m, d), Howard Hinnant's algorithm
    z = days + 719468
    era = z // 146097
    doe = z - era * 146097
    yoe = (doe - doe // 1460 + doe // 36524 - doe // 146096) // 365
    y = yoe + era * 400
    doy = doe - (365 * yoe + yoe // 4 - yoe // 100)
    mp = (5 * doy + 2) // 153
    d = doy - (153 * mp + 2) // 5 + 1
    m = mp + 3 if mp < 10 else mp - 9
    return (y + (m <= 2), m, d), secs


def unix_from_civil(y, m, d, secs=0):
    y -= m <= 2
    era = y // 400
    yoe = y - era * 400
    mp = m - 3 if m > 2 else m + 9
    doy = (153 * mp + 2) // 5 + d - 1
    doe = yoe * 365 + yoe // 4 - yoe // 100 + doy
    return (era * 146097 + doe - 719468) * 86400 + secs


def minus_month_then_day(seconds):
    (y, m, d), secs = civil_from_unix(seconds)
    y, m = (y - 1, 12) if m == 1 else (y, m - 1)
    d = min(d, calendar.monthrange(y, m)[1])
    return unix_from_civil(y, m, d, secs) - 86400


def iso_utc(seconds):
    (y, m, d), secs = civil_from_unix(seconds)
    h, rest = divmod(secs, 3600)
    mi, s = divmod(rest, 60)
    return f"{y:04d}-{m:02d}-{d:02d}T{h:02d}:{mi:02d}:{s:02d}Z"
