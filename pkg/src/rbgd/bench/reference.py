"""Reference NEPv results, kept as the exact printed strings.

Each cell maps (m, p) to method -> (Fval, grad norm, iterations, seconds).
"""

TABLE1 = {
    (500, 50): {
        'RSD': ('2.7674e+04', '5.1152e-05', '7566', '36.2087'),
        'RSD_ADA': ('2.7674e+04', '4.3667e-04', '7650', '40.2719'),
        'R_RBGD': ('2.7674e+04', '9.6010e-05', '4938', '23.5305'),
        'P_RBGD': ('2.7674e+04', '9.9854e-05', '4864', '40.7854'),
        'P_RBGD_C': ('2.7674e+04', '9.7726e-05', '4901', '46.7791'),
    },
    (1000, 50): {
        'RSD': ('2.7674e+04', '2.5639e-04', '8873', '68.4400'),
        'RSD_ADA': ('2.7674e+04', '3.8527e-04', '8988', '70.3007'),
        'R_RBGD': ('2.7674e+04', '9.8616e-05', '5518', '53.8013'),
        'P_RBGD': ('2.7674e+04', '9.9820e-05', '5503', '74.4051'),
        'P_RBGD_C': ('2.7674e+04', '9.8943e-05', '5510', '80.5897'),
    },
    (1500, 50): {
        'RSD': ('2.7674e+04', '9.1536e-04', '7108', '117.2364'),
        'RSD_ADA': ('2.7674e+04', '4.7544e-04', '6304', '113.7995'),
        'R_RBGD': ('2.7674e+04', '9.9155e-05', '5160', '102.2899'),
        'P_RBGD': ('2.7674e+04', '9.9829e-05', '5144', '130.3309'),
        'P_RBGD_C': ('2.7674e+04', '9.8907e-05', '5322', '133.2718'),
    },
    (2000, 50): {
        'RSD': ('2.7674e+04', '2.6418e-04', '8902', '159.2698'),
        'RSD_ADA': ('2.7674e+04', '4.3806e-04', '9115', '196.9259'),
        'R_RBGD': ('2.7674e+04', '9.5463e-05', '5964', '192.0930'),
        'P_RBGD': ('2.7674e+04', '9.8332e-05', '5884', '171.8766'),
        'P_RBGD_C': ('2.7674e+04', '9.7909e-05', '6019', '177.7956'),
    },
    (2500, 50): {
        'RSD': ('2.7674e+04', '2.3527e-04', '7840', '206.9153'),
        'RSD_ADA': ('2.7674e+04', '3.5709e-04', '7238', '232.8811'),
        'R_RBGD': ('2.7674e+04', '9.9000e-05', '5197', '204.8740'),
        'P_RBGD': ('2.7674e+04', '9.8332e-05', '5246', '179.6978'),
        'P_RBGD_C': ('2.7674e+04', '9.7069e-05', '5303', '207.1347'),
    },
    (3000, 50): {
        'RSD': ('2.7674e+04', '2.1955e-04', '7732', '221.2304'),
        'RSD_ADA': ('2.7674e+04', '5.1092e-04', '6015', '204.8033'),
        'R_RBGD': ('2.7674e+04', '9.8652e-05', '5315', '239.3315'),
        'P_RBGD': ('2.7674e+04', '9.8969e-05', '5265', '213.2356'),
        'P_RBGD_C': ('2.7674e+04', '9.8572e-05', '5233', '226.3744'),
    },
}

TABLE2 = {
    (5000, 10): {
        'RSD': ('2.8429e+02', '8.1462e-05', '249', '1.0864'),
        'RSD_ADA': ('2.8429e+02', '9.8615e-05', '307', '1.2623'),
        'R_RBGD': ('2.8429e+02', '9.3002e-05', '317', '1.3235'),
        'P_RBGD': ('2.8429e+02', '9.3140e-05', '315', '1.1404'),
        'P_RBGD_C': ('2.8429e+02', '9.5805e-05', '314', '1.3440'),
    },
    (5000, 20): {
        'RSD': ('1.9443e+03', '9.9204e-05', '1333', '9.7795'),
        'RSD_ADA': ('1.9443e+03', '9.8288e-05', '1401', '10.5765'),
        'R_RBGD': ('1.9443e+03', '9.7837e-05', '1282', '12.6708'),
        'P_RBGD': ('1.9443e+03', '9.9858e-05', '1274', '11.4878'),
        'P_RBGD_C': ('1.9443e+03', '9.8893e-05', '1267', '12.6460'),
    },
    (5000, 30): {
        'RSD': ('6.2293e+03', '9.9957e-05', '3328', '77.0571'),
        'RSD_ADA': ('6.2293e+03', '9.9447e-05', '3228', '84.4482'),
        'R_RBGD': ('6.2293e+03', '9.9393e-05', '1681', '43.5144'),
        'P_RBGD': ('6.2293e+03', '9.9030e-05', '1679', '38.0242'),
        'P_RBGD_C': ('6.2293e+03', '9.9961e-05', '1665', '40.7001'),
    },
    (5000, 40): {
        'RSD': ('1.4389e+04', '9.5968e-05', '5728', '171.1722'),
        'RSD_ADA': ('1.4389e+04', '3.1914e-04', '3872', '126.8553'),
        'R_RBGD': ('1.4389e+04', '9.8178e-05', '5367', '241.8630'),
        'P_RBGD': ('1.4389e+04', '9.6651e-05', '5356', '218.3186'),
        'P_RBGD_C': ('1.4389e+04', '9.8343e-05', '5339', '223.8977'),
    },
    (5000, 50): {
        'RSD': ('2.7674e+04', '2.7698e-04', '8007', '277.4160'),
        'RSD_ADA': ('2.7674e+04', '4.3422e-04', '7477', '300.1134'),
        'R_RBGD': ('2.7674e+04', '9.9805e-05', '5326', '328.1556'),
        'P_RBGD': ('2.7674e+04', '9.9563e-05', '5228', '303.5396'),
        'P_RBGD_C': ('2.7674e+04', '9.7795e-05', '5423', '337.2280'),
    },
    (5000, 60): {
        'RSD': ('4.7334e+04', '1.3049e-03', '10090', '392.3834'),
        'RSD_ADA': ('4.7334e+04', '6.6243e-04', '10260', '415.5020'),
        'R_RBGD': ('4.7334e+04', '9.9850e-05', '5128', '353.4060'),
        'P_RBGD': ('4.7334e+04', '9.9838e-05', '5267', '382.2308'),
        'P_RBGD_C': ('4.7334e+04', '9.8905e-05', '5300', '411.1444'),
    },
}

TABLES = {"table1": TABLE1, "table2": TABLE2}


def reference_fval(table, m, p):
    """The Fval string shared by all methods of a cell."""
    cell = TABLES[table][(m, p)]
    vals = {v[0] for v in cell.values()}
    if len(vals) != 1:
        raise ValueError(f"methods disagree on Fval in {table} cell {(m, p)}")
    return vals.pop()


def reference_iters(table, m, p, method):
    return int(TABLES[table][(m, p)][method][2])
