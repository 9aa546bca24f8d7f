"""Fixed operator table: name -> (priority, type)."""

PREFIX = {
    ":-": (1200, "fx"),
    "?-": (1200, "fx"),
    "\\+": (900, "fy"),
    "-": (200, "fy"),
}

INFIX = {
    ":-": (1200, "xfx"),
    ";": (1100, "xfy"),
    "->": (1050, "xfy"),
    ",": (1000, "xfy"),
    **{name: (700, "xfx") for name in ("=", "\\=", "==", "\\==", "is", "<", ">", "=<", ">=", "=:=", "=\\=")},
    "+": (500, "yfx"),
    "-": (500, "yfx"),
    "*": (400, "yfx"),
    "/": (400, "yfx"),
    "//": (400, "yfx"),
    "mod": (400, "yfx"),
}


def is_operator(name: str) -> bool:
    return name in PREFIX or name in INFIX


def infix_arg_limits(priority: int, kind: str) -> tuple[int, int]:
    left = priority if kind == "yfx" else priority - 1
    right = priority if kind == "xfy" else priority - 1
    return left, right


def prefix_arg_limit(priority: int, kind: str) -> int:
    return priority if kind == "fy" else priority - 1
