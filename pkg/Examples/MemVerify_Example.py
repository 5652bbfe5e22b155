import charpoly_tools as ct

# Mixed exponential moments of Q_N against the Gaussian field G
mem = ct.MemVerify(Ns=(64, 128, 256), delta=0.2, n_translates=4)
print(mem.report())

# Worst translates
print(mem.head(5))
