import charpoly_tools as ct

# Second-moment simulation on the Gaussian comparison field
params = ct.LowerBoundParams(n=10, delta=0.2, eta=3, stride=4)
result = ct.lower_bound_mc(params, n_samples=500, seed=3)

print(result.report())
print(result.summary())

# JSON record
'''
ct.emit(result.to_record(), 'lowerbound.json')
'''
