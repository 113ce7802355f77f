import io
import math

# version of the CSV column layout recorded in every run manifest
schema_version = 1

def format_value(value):
   if value is None:
      return ''
   if isinstance(value,(bool,int)):
      return str(value)
   value = float(value)
   if math.isnan(value):
      return 'nan'
   if math.isinf(value):
      return 'inf' if value>0 else '-inf'
   return f'{value:.12g}'

def write_table(header,rows,output):
   print(','.join(header),file=output)
   for row in rows:
      assert len(row)==len(header), f'Row of {len(row)} values does not match {len(header)} columns'
      print(','.join(format_value(value) for value in row),file=output)

def render_table(header,rows):
   output = io.StringIO()
   write_table(header,rows,output)
   return output.getvalue()

def jsonable(value):
   """
   Replaces non-finite floats (not valid JSON) by their string form.
   """
   if isinstance(value,dict):
      return {key : jsonable(item) for key, item in value.items()}
   if isinstance(value,(list,tuple)):
      return [jsonable(item) for item in value]
   if isinstance(value,float) and not math.isfinite(value):
      return format_value(value)
   return value
