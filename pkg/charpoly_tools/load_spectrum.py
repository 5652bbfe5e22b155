import json

import pandas as pd

from .emit import emit
from .ensemble import Spectrum


def sidecar_path(file_name):
    return file_name + '.json'


def save_spectrum(spectrum, file_name):
    ''' Write a Spectrum as CSV ``index,eigenvalue`` plus a JSON sidecar

    Parameters
    ----------
    spectrum : Spectrum

    file_name : str
        CSV path; the sidecar is ``file_name + '.json'``
    '''
    frame = pd.DataFrame({'index': range(spectrum.N), 'eigenvalue': spectrum.eigenvalues})
    emit(frame, file_name, 'csv')
    emit(spectrum.metadata(), sidecar_path(file_name), 'json')


def load_spectrum(file_name):
    '''Read a spectrum CSV and its JSON sidecar

    Parameters
    ----------
    file_name : string
        CSV written by save_spectrum

    Returns
    -------
    Spectrum
        Eigenvalues with N, model, seed and sampler from the sidecar
    '''
    frame = pd.read_csv(file_name, float_precision='round_trip')
    with open(sidecar_path(file_name), 'r') as f:
        meta = json.load(f)
    eigenvalues = frame.sort_values('index')['eigenvalue'].values
    if len(eigenvalues) != int(meta['N']):
        raise ValueError('%s holds %d eigenvalues, sidecar says N=%s'
                         % (file_name, len(eigenvalues), meta['N']))
    return Spectrum(eigenvalues, meta['model'], meta['seed'], meta['sampler'])
