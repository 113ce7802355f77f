import os
import math
import json
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from bosecount import __version__
from bosecount.params import load_config, detector_params, trap_scales_approx, recoil_condition, saturation, reduced_params
from bosecount.counting import count_distribution, efficiency, moments, cross_check, default_guard_digits
from bosecount.sector import exact_count_statistics, exact_count_statistics_reduced
from bosecount.stochastic import simulate_counts
from bosecount.statistics import binomial_reference, photon_source, detector_response, mix, mandel_counts, deviation
from bosecount.model import RunManifest
from bosecount.table import render_table, jsonable, schema_version
from bosecount.utils import DetectorError, ConfigurationError, OracleDisagreement, set_log_level

class QType(click.ParamType):
   """
   A positive shape coefficient q; the literal inf selects the Binomial limit.
   """
   name = 'q'

   def convert(self,value,param,ctx):
      if isinstance(value,float):
         return value
      try:
         q = math.inf if str(value).strip().lower() in ('inf','infinity') else float(value)
      except ValueError:
         self.fail(f'{value!r} is not a number or inf',param,ctx)
      if not q>0:
         self.fail(f'q must be positive, got {value}',param,ctx)
      return q

Q = QType()

class DetectorGroup(click.Group):

   def invoke(self,ctx):
      try:
         return super().invoke(ctx)
      except OracleDisagreement as ex:
         click.echo(f'Oracle disagreement: {ex}',err=True)
         ctx.exit(4)
      except DetectorError as ex:
         click.echo(f'Error: {ex}',err=True)
         ctx.exit(3)

def version_string():
   return '.'.join(map(str,__version__))

def common_options(command):
   command = click.option('--log-level',help='The logging level',default=os.environ.get('LOG_LEVEL','warning'))(command)
   command = click.option('--output-dir',help='The directory for default output files',default=os.environ.get('BOSECOUNT_OUTPUT_DIR','.'))(command)
   command = click.option('--out',help='The output file (- for stdout)',default=None)(command)
   return command

def emit(subcommand,text,out,output_dir,parameters,seed=None,suffix='.csv'):
   """
   Writes the output and its run manifest. With stdout as output the manifest
   goes to stderr.
   """
   data = text.encode('utf-8')
   manifest = RunManifest(subcommand,jsonable(parameters),seed=seed,version=version_string(),schema=schema_version,checksum=hashlib.sha256(data).hexdigest())
   manifest_text = json.dumps(manifest.save(),indent=2,sort_keys=True)
   if out=='-':
      click.echo(text,nl=False)
      click.echo(manifest_text,err=True)
      return
   if out is None:
      out = os.path.join(output_dir,f'{subcommand}{suffix}')
   directory = os.path.dirname(out)
   if directory:
      os.makedirs(directory,exist_ok=True)
   with open(out,'wb') as output:
      output.write(data)
   with open(f'{out}.manifest.json','w') as output:
      output.write(manifest_text)
      output.write('\n')
   logging.info(f'Wrote {out} ({len(data)} bytes)')

def binomial_for(dist):
   mean = moments(dist).mean
   eta = mean/dist.n if dist.n>0 else dist.p
   return eta, binomial_reference(eta,dist.n)

@click.group(cls=DetectorGroup)
def cli():
   pass

@cli.command()
def version():
   print(version_string())

@cli.command()
@click.option('--config','config_file',type=click.Path(exists=True,dir_okay=False),help='A YAML or JSON configuration file')
@click.option('--atom-mass',type=float,help='The atom mass (kg)')
@click.option('--trap-frequency',type=float,help='The trap frequency ν (rad/s)')
@click.option('--photon-wavenumber',type=float,help='The photon wavenumber k₀ (1/m)')
@click.option('--rabi-frequency',type=float,help='The vacuum Rabi frequency Ω (rad/s)')
@click.option('--detuning',type=float,help='The detuning Δ (rad/s)')
@click.option('--atom-number',type=int,help='The condensate atom number A')
@click.option('--transition-frequency',type=float,help='The atomic transition frequency ω_eg (rad/s)')
@click.option('--tau',type=float,default=0.0,help='The counting interval τ (s)')
@click.option('--excitations',type=int,default=1,help='The excitation number N of the sector')
@common_options
def params(config_file,atom_mass,trap_frequency,photon_wavenumber,rabi_frequency,detuning,atom_number,transition_frequency,tau,excitations,out,output_dir,log_level):
   set_log_level(log_level)
   try:
      cfg = load_config(
         config_file,
         atom_mass=atom_mass,
         trap_frequency=trap_frequency,
         photon_wavenumber=photon_wavenumber,
         rabi_frequency=rabi_frequency,
         detuning=detuning,
         atom_number=atom_number,
         transition_frequency=transition_frequency
      )
      result = detector_params(cfg,tau,N=excitations,strict=False)
   except ConfigurationError as ex:
      raise click.UsageError(str(ex))
   if not result.overdamped:
      click.echo(f'Warning: S={result.saturation:.6g} >= 1, the over-damped regime is violated',err=True)
   group_velocity_approx, escape_rate_approx = trap_scales_approx(cfg)
   report = result.save()
   report['group_velocity_approx'] = group_velocity_approx
   report['escape_rate_approx'] = escape_rate_approx
   report['recoil_condition'] = recoil_condition(cfg,N=excitations)
   report['photon_wavenumber'] = cfg.photon_wavenumber
   parameters = {'config' : config_file, 'tau' : tau, 'excitations' : excitations, **{key : getattr(cfg,key) for key in ['atom_mass','trap_frequency','photon_wavenumber','rabi_frequency','detuning','atom_number','transition_frequency']}}
   emit('params',json.dumps(jsonable(report),indent=2)+'\n',out,output_dir,parameters,suffix='.json')

@cli.command('efficiency')
@click.option('--q','q_values',type=Q,multiple=True,help='Explicit q values (replaces the log-spaced grid)')
@click.option('--q-min',type=float,default=1.0,help='The smallest q of the grid')
@click.option('--q-max',type=float,default=1e6,help='The largest q of the grid')
@click.option('--points',type=click.IntRange(min=1),default=61,help='The number of log-spaced grid points')
@click.option('--p',type=click.FloatRange(0,1),default=0.9,help='The single-atom escape probability')
@click.option('--n','n_values',type=click.IntRange(min=1),multiple=True,default=[1,10,20],help='Photon numbers')
@click.option('--workers',type=click.IntRange(min=1),default=1,help='Threads for the sweep')
@common_options
def efficiency_command(q_values,q_min,q_max,points,p,n_values,workers,out,output_dir,log_level):
   set_log_level(log_level)
   if not q_values:
      if not 0<q_min<=q_max:
         raise click.BadParameter('requires 0 < q-min <= q-max',param_hint='--q-min')
      q_values = np.geomspace(q_min,q_max,points).tolist()
   grid = [(q,n) for n in n_values for q in q_values]
   evaluate = lambda point : efficiency(point[0],p,point[1])
   if workers==1:
      values = list(map(evaluate,grid))
   else:
      with ThreadPoolExecutor(max_workers=workers) as pool:
         values = list(pool.map(evaluate,grid))
   rows = [(q,n,eta,eta/p if p>0 else math.nan) for (q,n), eta in zip(grid,values)]
   parameters = {'q' : list(q_values), 'p' : p, 'n' : list(n_values)}
   emit('efficiency',render_table(['q','n','eta_D','eta_D_over_p'],rows),out,output_dir,parameters)

@cli.command()
@click.option('--q',type=Q,required=True,help='The shape coefficient (inf for the Binomial limit)')
@click.option('--p',type=click.FloatRange(0,1),required=True,help='The single-atom escape probability')
@click.option('--n',type=click.IntRange(min=0),required=True,help='The photon number')
@click.option('--mc','shots',type=click.IntRange(min=1),help='Add a Monte Carlo column with this many shots')
@click.option('--seed',type=click.IntRange(min=0),default=0,help='The Monte Carlo seed')
@click.option('--workers',type=click.IntRange(min=1),default=1,help='Threads for the Monte Carlo run')
@click.option('--exact','atom_number',type=click.IntRange(min=1),help='Add the exact sector solution for this atom number')
@click.option('--gamma',type=float,default=1.0,help='The escape rate γ for the exact solution')
@click.option('--detuning',type=float,default=0.0,help='The detuning Δ for the exact solution')
@click.option('--check-routes',is_flag=True,help='Cross-check the closed form with partial fractions')
@click.option('--tolerance',type=float,default=1e-8,help='The route comparison tolerance')
@click.option('--guard-digits',type=click.IntRange(min=0),default=default_guard_digits(),help='Extra digits for the partial fractions')
@common_options
def counts(q,p,n,shots,seed,workers,atom_number,gamma,detuning,check_routes,tolerance,guard_digits,out,output_dir,log_level):
   set_log_level(log_level)
   closed = count_distribution(q,p,n)
   if check_routes:
      check = cross_check(q,p,n,tolerance=tolerance,guard_digits=guard_digits)
      click.echo(f'Route comparison: TV={check.distance:.3e}, {check.digits_lost:.1f} digits lost',err=True)
   header = ['a','P_closed']
   columns = [closed.probabilities]
   if shots is not None:
      empirical = simulate_counts(n,q,p,shots,rng=seed,workers=workers)
      header += ['P_mc','mc_stderr']
      columns += [empirical.probabilities,empirical.stderr]
   if atom_number is not None:
      exact = exact_count_statistics_reduced(atom_number,n,q,p,gamma,detuning)
      header += ['P_exact']
      columns += [exact.probabilities]
   eta, binomial = binomial_for(closed)
   header += ['P_binomial','deviation']
   columns += [binomial.probabilities,closed.probabilities - binomial.probabilities]
   rows = [(a,*[column[a] for column in columns]) for a in range(n+1)]
   parameters = {
      'q' : q, 'p' : p, 'n' : n, 'eta_D' : eta,
      'shots' : shots, 'workers' : workers,
      'exact_atom_number' : atom_number, 'gamma' : gamma, 'detuning' : detuning,
      'check_routes' : check_routes, 'tolerance' : tolerance, 'guard_digits' : guard_digits
   }
   emit('counts',render_table(header,rows),out,output_dir,parameters,seed=seed if shots is not None else None)

@cli.command('mix')
@click.option('--source',type=click.Choice(['fock','coherent','thermal']),required=True,help='The photon statistics')
@click.option('--mean','value',type=click.FloatRange(min=0),required=True,help='The mean photon number (the photon number for fock)')
@click.option('--q',type=Q,required=True,help='The shape coefficient (inf for the Binomial limit)')
@click.option('--p',type=click.FloatRange(0,1),required=True,help='The single-atom escape probability')
@click.option('--eta',type=click.FloatRange(0,1),help='The Mandel efficiency (default: mean atom count per mean photon number)')
@click.option('--tail',type=float,default=1e-12,help='The truncated photon-number mass')
@common_options
def mix_command(source,value,q,p,eta,tail,out,output_dir,log_level):
   set_log_level(log_level)
   if source=='fock' and not float(value).is_integer():
      raise click.BadParameter('must be an integer for fock',param_hint='--mean')
   photons = photon_source(source,value,tail)
   response = detector_response(q,p,photons.n_max)
   P = mix(photons,response)
   if eta is None:
      photon_mean = photons.mean
      eta = float(np.dot(np.arange(len(P)),P))/photon_mean if photon_mean>0 else p
   mandel = mandel_counts(photons,eta)
   rows = [(a,P[a],mandel[a],P[a] - mandel[a]) for a in range(len(P))]
   parameters = {'source' : source, 'mean' : value, 'q' : q, 'p' : p, 'eta' : eta, 'tail' : tail, 'label' : photons.label, 'truncation' : photons.truncation}
   emit('mix',render_table(['a','P_a','P_a_mandel','deviation'],rows),out,output_dir,parameters)

@cli.command()
@click.option('--atom-number',type=click.IntRange(min=1),required=True,help='The condensate atom number A')
@click.option('--n',type=click.IntRange(min=0),required=True,help='The photon number')
@click.option('--rabi-frequency',type=float,help='The Rabi frequency Ω (with --tau)')
@click.option('--tau',type=click.FloatRange(min=0),help='The counting interval τ (with --rabi-frequency)')
@click.option('--q',type=Q,help='The shape coefficient (with --p)')
@click.option('--p',type=click.FloatRange(0,1),help='The escape probability (with --q)')
@click.option('--gamma',type=float,default=1.0,help='The escape rate γ')
@click.option('--detuning',type=float,default=0.0,help='The detuning Δ')
@click.option('--tolerance',type=float,help='The allowed total variation (default 0.01 + n/A)')
@click.option('--solver-tol',type=float,default=1e-9,help='The ODE solver tolerance')
@click.option('--zero-order',is_flag=True,help='Use the large-A couplings')
@common_options
def exact(atom_number,n,rabi_frequency,tau,q,p,gamma,detuning,tolerance,solver_tol,zero_order,out,output_dir,log_level):
   set_log_level(log_level)
   closed = None
   if rabi_frequency is not None and tau is not None:
      exact = exact_count_statistics(atom_number,n,tau,rabi_frequency,detuning,gamma,solver_tol=solver_tol,zero_order=zero_order)
      S = saturation(atom_number,1,rabi_frequency,gamma,detuning)
      if S<1:
         reduced = reduced_params(S,gamma,tau)
         q, p = reduced.q, reduced.p
      else:
         q = p = None
   elif q is not None and p is not None:
      exact = exact_count_statistics_reduced(atom_number,n,q,p,gamma,detuning,solver_tol=solver_tol,zero_order=zero_order)
   else:
      raise click.UsageError('requires either --rabi-frequency and --tau or --q and --p')
   if q is not None and p is not None:
      closed = count_distribution(q,p,n)
   if tolerance is None:
      tolerance = 0.01 + n/atom_number
   parameters = {
      'atom_number' : atom_number, 'n' : n, 'rabi_frequency' : rabi_frequency, 'tau' : tau,
      'q' : q, 'p' : p, 'gamma' : gamma, 'detuning' : detuning,
      'tolerance' : tolerance, 'solver_tol' : solver_tol, 'zero_order' : zero_order
   }
   header = ['a','P_exact','P_closed','deviation']
   if closed is None:
      # no closed form beyond the over-damped regime
      rows = [(a,exact.probabilities[a],math.nan,math.nan) for a in range(n+1)]
      emit('exact',render_table(header,rows),out,output_dir,parameters)
      click.echo(f'Warning: S={S:.6g} >= 1, the closed form is not defined and was not compared',err=True)
      return
   compared = deviation(exact,closed)
   rows = [(a,exact.probabilities[a],closed.probabilities[a],compared.differences[a]) for a in range(n+1)]
   emit('exact',render_table(header,rows),out,output_dir,parameters)
   click.echo(f'Total variation {compared.total_variation:.3e} (tolerance {tolerance:.3e})',err=True)
   if compared.total_variation>tolerance:
      raise OracleDisagreement('Exact sector statistics differ from the closed form',distance=compared.total_variation,tolerance=tolerance)

@cli.command()
@click.option('--q',type=Q,required=True,help='The shape coefficient (inf for the Binomial limit)')
@click.option('--p',type=click.FloatRange(0,1),required=True,help='The single-atom escape probability')
@click.option('--n',type=click.IntRange(min=0),required=True,help='The photon number')
@click.option('--shots',type=click.IntRange(min=1),default=1000000,help='The number of shots')
@click.option('--seed',type=click.IntRange(min=0),default=0,help='The seed')
@click.option('--workers',type=click.IntRange(min=1),default=1,help='Threads for the simulation')
@click.option('--sigmas',type=float,default=4.0,help='The allowed deviation in standard errors')
@common_options
def mc(q,p,n,shots,seed,workers,sigmas,out,output_dir,log_level):
   set_log_level(log_level)
   empirical = simulate_counts(n,q,p,shots,rng=seed,workers=workers)
   closed = count_distribution(q,p,n)
   scores = empirical.scores(closed)
   rows = [(a,empirical.probabilities[a],empirical.stderr[a],closed.probabilities[a],scores[a]) for a in range(n+1)]
   parameters = {'q' : q, 'p' : p, 'n' : n, 'shots' : shots, 'workers' : workers, 'sigmas' : sigmas}
   emit('mc',render_table(['a','P_mc','mc_stderr','P_closed','score'],rows),out,output_dir,parameters,seed=seed)
   worst = float(np.max(np.abs(scores)))
   if worst>sigmas:
      raise OracleDisagreement('Monte Carlo histogram differs from the closed form',distance=worst,tolerance=sigmas)

if __name__=='__main__':
   cli()
