import charpoly_tools as ct

# Sample a GUE spectrum, save it and read it back
model = ct.gue_model()
spectrum = ct.sample_spectrum(model, 512, seed=11)
ct.save_spectrum(spectrum, 'gue_512.csv')

loaded = ct.load_spectrum('gue_512.csv')
print(loaded)
print(loaded.moments(4))

# Quartic potential through the Metropolis sampler
'''
quartic = ct.quartic_model(1.0)
spectrum = ct.sample_spectrum(quartic, 64, seed=11, sweeps=500)
print(spectrum.diagnostics['acceptance_rate'])
'''
