import charpoly_tools as ct

# Ratio formulas against Monte Carlo at N = 4
fs = ct.FsVerify(n_samples=100000, seed=1)
print(fs.report())
print('all cases within 3 standard errors:', fs.passed(3.0))

# A single balanced ratio from the recurrence table
table = ct.recurrence_table(ct.gue_model(), 6, 6)
print(ct.fs_balanced(table, [0.3 + 0.4j], [-0.2 + 0.5j]))
