import charpoly_tools as ct

# Maximum of the centered log-characteristic polynomial over [-1, 1]
model = ct.gue_model()
exp = ct.MaxExperiment(model, [256, 1024], n_samples=50, seed=7)

# Per-N medians and quartiles of max / log N
print(exp.report())

# Largest observed maxima
print(exp.head(5))

# Fraction of samples above log N + 3 log log N
print(exp.upper_tail_fraction(3.0))

# Plot-ready CSV
'''
ct.emit(exp.df, 'max_experiment.csv')
'''
