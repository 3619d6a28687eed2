"""Failure stresses (GPa) of single carbon fibres at four gauge lengths."""


FIBERS_1MM = (
    2.247, 2.64, 2.842, 2.908, 3.099, 3.126, 3.245, 3.328, 3.355, 3.383,
    3.572, 3.581, 3.681, 3.726, 3.727, 3.728, 3.783, 3.785, 3.786, 3.896,
    3.912, 3.964, 4.05, 4.063, 4.082, 4.111, 4.118, 4.141, 4.216, 4.251,
    4.262, 4.326, 4.402, 4.457, 4.466, 4.519, 4.542, 4.555, 4.614, 4.632,
    4.634, 4.636, 4.678, 4.698, 4.738, 4.832, 4.924, 5.043, 5.099, 5.134,
    5.359, 5.473, 5.571, 5.684, 5.721, 5.998, 6.06,
)

FIBERS_10MM = (
    1.901, 2.132, 2.203, 2.228, 2.257, 2.35, 2.361, 2.396, 2.397, 2.445,
    2.454, 2.454, 2.474, 2.518, 2.522, 2.525, 2.532, 2.575, 2.614, 2.616,
    2.618, 2.624, 2.659, 2.675, 2.738, 2.74, 2.856, 2.917, 2.928, 2.937,
    2.937, 2.977, 2.996, 3.03, 3.125, 3.139, 3.145, 3.22, 3.223, 3.235,
    3.243, 3.264, 3.272, 3.294, 3.332, 3.346, 3.377, 3.408, 3.435, 3.493,
    3.501, 3.537, 3.554, 3.562, 3.628, 3.852, 3.871, 3.886, 3.971, 4.024,
    4.027, 4.225, 4.395, 5.02,
)

FIBERS_20MM = (
    1.312, 1.314, 1.479, 1.552, 1.7, 1.803, 1.861, 1.865, 1.944, 1.958,
    1.966, 1.997, 2.006, 2.021, 2.027, 2.055, 2.063, 2.098, 2.14, 2.179,
    2.224, 2.24, 2.253, 2.27, 2.272, 2.274, 2.301, 2.301, 2.339, 2.359,
    2.382, 2.382, 2.426, 2.434, 2.435, 2.478, 2.49, 2.511, 2.514, 2.535,
    2.554, 2.566, 2.57, 2.586, 2.629, 2.633, 2.642, 2.648, 2.684, 2.697,
    2.726, 2.77, 2.773, 2.8, 2.809, 2.818, 2.821, 2.848, 2.88, 2.954, 3.012,
    3.067, 3.084, 3.09, 3.096, 3.128, 3.233, 3.433, 3.585, 3.585,
)

FIBERS_50MM = (
    1.339, 1.434, 1.549, 1.574, 1.589, 1.613, 1.746, 1.753, 1.764, 1.807,
    1.812, 1.84, 1.852, 1.852, 1.862, 1.864, 1.931, 1.952, 1.974, 2.019,
    2.051, 2.055, 2.058, 2.088, 2.125, 2.162, 2.171, 2.172, 2.18, 2.194,
    2.211, 2.27, 2.272, 2.28, 2.299, 2.308, 2.335, 2.349, 2.356, 2.386,
    2.39, 2.41, 2.43, 2.431, 2.458, 2.471, 2.497, 2.514, 2.558, 2.577,
    2.593, 2.601, 2.604, 2.62, 2.633, 2.67, 2.682, 2.699, 2.705, 2.735,
    2.785, 2.785, 3.02, 3.042, 3.116, 3.174,
)

BUILTIN = {
    "fibers-1mm": FIBERS_1MM,
    "fibers-10mm": FIBERS_10MM,
    "fibers-20mm": FIBERS_20MM,
    "fibers-50mm": FIBERS_50MM,
}

#: SHA-256 of each dataset in canonical form (see :func:`canonical_bytes`).
SHA256 = {
    "fibers-1mm": "684f6256e7dacf42c7287241eee6aecf2f5423010861e50154767cb96392ee8a",
    "fibers-10mm": "856096432647624788040500ebf904a07a10ab077c16f9ea152b033777ac54e9",
    "fibers-20mm": "cedb73906b98153b1491f2c29bdb6b5290df2cc99abaea138247e9cd743ad948",
    "fibers-50mm": "9aa9b42ebaa66796b107aee7b680b24db6df977f79a4a727042895664aa65bff",
}


def canonical_bytes(values) -> bytes:
    """One shortest round-trip decimal per line, UTF-8, trailing newline."""
    return "".join(repr(float(v)) + "\n" for v in values).encode("utf-8")
