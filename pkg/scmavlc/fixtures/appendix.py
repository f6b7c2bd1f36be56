"""Published 4-resource codebooks, designed at varsigma2 = 5 and Pe = 30.

Each entry is the K x M codebook ``V_j C_j`` of one user, exactly as printed.
"""

#:
dr_j3 = (
    (
        (0, 0, 0, 0),
        (3.1908, 0.4595, 0.1090, 0.4907),
        (0, 0, 0, 0),
        (4.6727, 9.1620, 1.8083, 0.1476),
    ),
    (
        (0.1074, 2.9890, 3.0405, 0.1300),
        (0, 0, 0, 0),
        (1.3517, 0.1077, 8.8601, 4.5986),
        (0, 0, 0, 0),
    ),
    (
        (0.1119, 0.1105, 5.3128, 5.3146),
        (0.1123, 5.6158, 5.6235, 0.1178),
        (0, 0, 0, 0),
        (0, 0, 0, 0),
    ),
)

#:
ls_j3 = (
    (
        (0, 0, 0, 0),
        (2.7712, 0.0100, 0.0100, 2.6317),
        (0, 0, 0, 0),
        (4.4089, 9.1626, 1.4151, 0.0100),
    ),
    (
        (0.0100, 2.7785, 2.5709, 0.0100),
        (0, 0, 0, 0),
        (0.0100, 1.4036, 9.1888, 4.3893),
        (0, 0, 0, 0),
    ),
    (
        (0.0100, 5.4749, 0.0100, 5.4747),
        (0.0100, 5.4797, 5.4796, 0.0100),
        (0, 0, 0, 0),
        (0, 0, 0, 0),
    ),
)

#:
ls_j4 = (
    (
        (0, 0, 0, 0),
        (1.5383, 3.0405, 0.0167, 8.9796),
        (0, 0, 0, 0),
        (1.3426, 5.0483, 0.0173, 0.0374),
    ),
    (
        (0.0191, 3.5636, 4.1652, 0.9455),
        (0, 0, 0, 0),
        (0.0156, 0.5631, 8.9683, 2.7765),
        (0, 0, 0, 0),
    ),
    (
        (0.0278, 6.5059, 0.0257, 6.4581),
        (0.0296, 4.1903, 4.2063, 0.0268),
        (0, 0, 0, 0),
        (0, 0, 0, 0),
    ),
    (
        (0, 0, 0, 0),
        (0, 0, 0, 0),
        (0.0207, 1.5398, 5.0348, 0.0264),
        (0.0154, 2.3810, 0.3892, 9.2690),
    ),
)

#:
ls_j5 = (
    (
        (0, 0, 0, 0),
        (1.8229, 0.8713, 0.0707, 9.3633),
        (0, 0, 0, 0),
        (0.2044, 4.4911, 1.5872, 0.5904),
    ),
    (
        (1.3717, 4.8155, 1.2190, 0.1399),
        (0, 0, 0, 0),
        (0.0725, 1.1399, 9.0214, 2.4409),
        (0, 0, 0, 0),
    ),
    (
        (0.1790, 0.3468, 2.3449, 8.1443),
        (0.0915, 2.9830, 5.7936, 0.3253),
        (0, 0, 0, 0),
        (0, 0, 0, 0),
    ),
    (
        (0, 0, 0, 0),
        (0, 0, 0, 0),
        (0.0936, 1.8345, 4.8909, 0.6543),
        (1.1709, 0.1005, 2.2914, 9.0194),
    ),
    (
        (3.1438, 0.1500, 6.2322, 1.5089),
        (0, 0, 0, 0),
        (0, 0, 0, 0),
        (0.1397, 1.4186, 3.3720, 6.4569),
    ),
)

#:
ls_j6 = (
    (
        (0, 0, 0, 0),
        (0.8677, 2.1631, 0.0295, 6.5262),
        (0, 0, 0, 0),
        (1.8603, 8.1426, 0.0594, 0.0741),
    ),
    (
        (0.8433, 5.9356, 2.0682, 0.0335),
        (0, 0, 0, 0),
        (0.0379, 0.0580, 8.6673, 1.8618),
        (0, 0, 0, 0),
    ),
    (
        (0.1106, 0.0293, 1.9845, 9.2333),
        (0.0687, 4.7442, 2.2192, 0.0930),
        (0, 0, 0, 0),
        (0, 0, 0, 0),
    ),
    (
        (0, 0, 0, 0),
        (0, 0, 0, 0),
        (0.0476, 1.5733, 5.8671, 0.0408),
        (1.0104, 0.0347, 0.4297, 8.9561),
    ),
    (
        (3.2891, 0.0679, 3.8873, 0.1111),
        (0, 0, 0, 0),
        (0, 0, 0, 0),
        (0.0304, 1.3519, 3.6688, 5.7811),
    ),
    (
        (0, 0, 0, 0),
        (0.0788, 9.8115, 0.0528, 1.9884),
        (3.9862, 1.1829, 0.7601, 0.0323),
        (0, 0, 0, 0),
    ),
)
