import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bosecount.statistics import PhotonStatistics, fock, vacuum, coherent, thermal, photon_source, detector_response, binomial_response, mix, binomial_reference, mandel_counts, poisson_reference, bose_reference, deviation
from bosecount.counting import count_distribution, efficiency
from bosecount.model import Method
from bosecount.utils import ConfigurationError

def test_fock_row():
   response = detector_response(10.0,0.9,6)
   P = mix(fock(6),response)
   assert_allclose(P,count_distribution(10.0,0.9,6).probabilities,rtol=1e-9,atol=1e-12)
   assert response.row(6).n==6
   # rows are lower triangular and normalized
   assert_allclose(response.matrix.sum(axis=1),1,atol=1e-10)
   assert np.all(np.triu(response.matrix,1)==0)

def test_vacuum():
   photons = vacuum()
   assert photons.n_max==0 and photons.mean==0
   assert_allclose(mix(photons,detector_response(10.0,0.9,0)),[1.0])

def test_coherent_binomial_detector():
   photons = coherent(5.0)
   assert photons.truncation<=1e-12
   P = mix(photons,detector_response(math.inf,0.7,photons.n_max))
   assert_allclose(P,poisson_reference(5.0*0.7,photons.n_max),atol=1e-10)

def test_thermal_mandel():
   photons = thermal(2.0)
   assert_allclose(photons.mean,2.0,rtol=1e-9)
   P = mandel_counts(photons,0.4)
   assert_allclose(P,bose_reference(0.8,photons.n_max),atol=1e-10)

def test_fock_mandel():
   assert_allclose(mandel_counts(fock(8),0.3),binomial_reference(0.3,8).probabilities,rtol=0,atol=0)

def test_zero_means():
   assert coherent(0.0).probabilities.tolist()==[1.0]
   assert thermal(0.0).probabilities.tolist()==[1.0]
   assert bose_reference(0.0,3).tolist()==[1,0,0,0]

def test_photon_source():
   assert photon_source('fock',3).label=='fock(3)'
   assert photon_source('coherent',1.5).label=='coherent(1.5)'
   assert photon_source('thermal',1.5).label=='thermal(1.5)'
   with pytest.raises(ConfigurationError) as error:
      photon_source('squeezed',1.0)
   assert error.value.field=='source'

def test_binomial_reference():
   assert binomial_reference(0.0,4).probabilities.tolist()==[1,0,0,0,0]
   assert binomial_reference(1.0,4).probabilities.tolist()==[0,0,0,0,1]
   reference = binomial_reference(0.35,9)
   assert reference.method==Method.BINOMIAL
   expected = [math.comb(9,a)*0.35**a*0.65**(9-a) for a in range(10)]
   assert_allclose(reference.probabilities,expected,rtol=1e-12)

def test_binomial_detector_is_mandel():
   photons = coherent(3.0)
   P = mix(photons,detector_response(math.inf,0.6,photons.n_max))
   assert np.array_equal(P,mandel_counts(photons,0.6))
   assert np.array_equal(binomial_response(0.6,4).matrix,detector_response(math.inf,0.6,4).matrix)

def test_deviation_identity():
   dist = count_distribution(10.0,0.9,5)
   result = deviation(dist,dist)
   assert result.total_variation==0
   assert result.fano_ratio==1.0
   assert np.all(result.differences==0)

def test_deviation_delta_reference():
   result = deviation(binomial_reference(1.0,3),binomial_reference(1.0,3))
   assert result.fano_ratio==1.0
   result = deviation(count_distribution(10.0,0.5,3),binomial_reference(1.0,3))
   assert math.isinf(result.fano_ratio)

def test_deviation_pads():
   result = deviation([0.5,0.5],[0.25,0.5,0.25])
   assert len(result.differences)==3
   assert_allclose(result.total_variation,0.25)

def test_narrower_than_binomial():
   for q, p in [(10.0,0.9),(10.0,0.6),(100.0,0.9)]:
      eta = efficiency(q,p,10)
      result = deviation(count_distribution(q,p,10),binomial_reference(eta,10))
      assert result.fano_ratio<1

def test_mixture_approaches_mandel():
   photons = coherent(4.0)
   reference = mandel_counts(photons,0.9)
   distances = []
   for q in [10.0,100.0,1000.0]:
      P = mix(photons,detector_response(q,0.9,photons.n_max))
      distances.append(deviation(P,reference).total_variation)
   assert distances[1]<distances[0]
   assert distances[2]<distances[1]

def test_coverage():
   with pytest.raises(ConfigurationError) as error:
      mix(coherent(5.0),detector_response(10.0,0.5,3))
   assert error.value.field=='n_max'

def test_photon_statistics_validation():
   with pytest.raises(ConfigurationError):
      PhotonStatistics([1.1,-0.1])
   with pytest.raises(ConfigurationError):
      PhotonStatistics([0.5,0.2])
   with pytest.raises(ConfigurationError):
      coherent(-1.0)

@pytest.mark.parametrize('p',[0.6,0.9])
def test_matched_binomial_distance_decreases(p):
   distances = []
   for q in [10.0,30.0,100.0,300.0,1000.0]:
      eta = efficiency(q,p,10)
      distances.append(deviation(count_distribution(q,p,10),binomial_reference(eta,10)).total_variation)
   assert np.all(np.diff(distances)<0)

def test_response_rows_match_single_photon_numbers():
   response = detector_response(30.0,0.8,12)
   for n in range(13):
      assert_allclose(response.row(n).probabilities,count_distribution(30.0,0.8,n).probabilities,rtol=1e-9,atol=1e-12)

def test_thermal_response_large_n_max():
   # one propagation covers every photon number up to the truncation
   photons = thermal(10.0)
   assert photons.n_max>250
   response = detector_response(10.0,0.9,photons.n_max)
   assert_allclose(response.matrix.sum(axis=1),1,atol=1e-9)
   P = mix(photons,response)
   assert_allclose(P.sum(),1,atol=1e-9)
   mean = float(np.dot(np.arange(len(P)),P))
   assert 0<mean<0.9*photons.mean
