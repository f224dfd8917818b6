from wtforms import BooleanField, FloatField, Form, IntegerField, SelectField, StringField, ValidationError
from wtforms.validators import NumberRange, Optional

from config import Config


class RunMode:
    SOLVE = 'solve'
    BASELINE = 'baseline'
    VERIFY = 'verify'
    SWEEP = 'sweep'

    ALL = (SOLVE, BASELINE, VERIFY, SWEEP)


FALSE_VALUES = (False, 'false', 'False', 'no', 'off', '0', '')


def parse_masses(text):
    """'1, 2.5,4' -> [1.0, 2.5, 4.0]"""
    items = [item.strip() for item in text.split(',') if item.strip()]
    try:
        return [float(item) for item in items]
    except ValueError:
        raise ValidationError(f'Sweep masses must be comma-separated numbers, got {text!r}')


class RunConfigForm(Form):
    """Run configuration: config-file values merged with command-line overrides"""
    # Physical parameters
    alpha = FloatField('alpha', default=0.0, validators=[Optional()])
    beta = FloatField('beta', default=0.0, validators=[Optional()])
    p = FloatField('p', default=3.0, validators=[Optional()])
    c = FloatField('c', validators=[Optional()])

    # Grid
    L = FloatField('L', default=Config.HALF_WIDTH, validators=[Optional()])
    N = IntegerField('N', default=Config.POINTS, validators=[Optional()])

    # Solver
    grad_tol = FloatField('grad_tol', default=Config.GRAD_TOL, validators=[
        Optional(),
        NumberRange(min=0, message='Gradient tolerance must be nonnegative')
    ])
    max_iter = IntegerField('max_iter', default=Config.MAX_ITER, validators=[
        Optional(),
        NumberRange(min=0, message='Iteration cap must be nonnegative')
    ])
    seed = IntegerField('seed', default=0, validators=[Optional()])
    init = SelectField('init', default='bound_state', choices=[
        ('bound_state', 'Linear bound state'),
        ('perturbed', 'Perturbed bound state'),
        ('gaussian', 'Random Gaussian')
    ], validators=[Optional()])
    step_init = FloatField('step_init', default=Config.STEP_INIT, validators=[Optional()])
    armijo_factor = FloatField('armijo_factor', default=Config.ARMIJO_FACTOR, validators=[Optional()])
    armijo_slope = FloatField('armijo_slope', default=Config.ARMIJO_SLOPE, validators=[Optional()])
    regauge_period = IntegerField('regauge_period', default=Config.REGAUGE_PERIOD, validators=[
        Optional(),
        NumberRange(min=1, message='Regauge period must be at least 1')
    ])
    q_min_regauge = FloatField('q_min_regauge', validators=[
        Optional(),
        NumberRange(min=0, message='Regauge threshold must be nonnegative')
    ])
    precond_shift = FloatField('precond_shift', default=Config.PRECOND_SHIFT, validators=[Optional()])
    k_tilde = FloatField('k_tilde', validators=[Optional()])
    gn_samples = IntegerField('gn_samples', default=Config.GN_SAMPLES, validators=[
        Optional(),
        NumberRange(min=1, message='At least one GN sample is required')
    ])

    # Output and orchestration
    out = StringField('out', default=Config.OUTPUT_DIR, validators=[Optional()])
    emit_fields = BooleanField('emit_fields', default=False, false_values=FALSE_VALUES)
    sweep_masses = StringField('sweep_masses', validators=[Optional()])
    jobs = IntegerField('jobs', default=1, validators=[
        Optional(),
        NumberRange(min=1, message='Jobs must be at least 1')
    ])

    def __init__(self, formdata=None, mode=None, **kwargs):
        self.mode = mode
        self.masses = None
        super(RunConfigForm, self).__init__(formdata, **kwargs)

    def validate_p(self, field):
        """The nonlinearity exponent must exceed 2"""
        if field.data is not None and not field.data > 2:
            raise ValidationError('p must exceed 2')

    def validate_c(self, field):
        if field.data is not None and not field.data > 0:
            raise ValidationError('Mass c must be positive')

    def validate_L(self, field):
        if field.data is not None and not field.data > 0:
            raise ValidationError('Half-width L must be positive')

    def validate_N(self, field):
        """Grid size: even, at least 8"""
        if field.data is not None and (field.data < 8 or field.data % 2):
            raise ValidationError('N must be an even integer of at least 8')

    def validate_step_init(self, field):
        if field.data is not None and not field.data > 0:
            raise ValidationError('Initial step must be positive')

    def validate_armijo_factor(self, field):
        if field.data is not None and not 0 < field.data < 1:
            raise ValidationError('Backtracking factor must lie in (0, 1)')

    def validate_armijo_slope(self, field):
        if field.data is not None and not 0 < field.data < 1:
            raise ValidationError('Armijo slope must lie in (0, 1)')

    def validate_precond_shift(self, field):
        if field.data is not None and not field.data > 0:
            raise ValidationError('Preconditioner shift must be positive')

    def validate_k_tilde(self, field):
        if field.data is not None and not field.data > 0:
            raise ValidationError('K~_GN must be positive')

    def validate_sweep_masses(self, field):
        """Sweep masses: positive and strictly increasing"""
        masses = parse_masses(field.data)
        if not masses:
            raise ValidationError('Sweep masses must not be empty')
        if any(not m > 0 for m in masses):
            raise ValidationError('Sweep masses must be positive')
        if any(b <= a for a, b in zip(masses, masses[1:])):
            raise ValidationError('Sweep masses must be strictly increasing')
        self.masses = masses

    def validate(self, extra_validators=None):
        """Custom validation to handle mode-dependent required fields"""
        if not super(RunConfigForm, self).validate(extra_validators=extra_validators):
            return False

        if self.mode in (RunMode.SOLVE, RunMode.BASELINE) and self.c.data is None:
            self.c.errors.append(f'c is required in {self.mode} mode')
            return False

        if self.mode == RunMode.SWEEP and not self.masses:
            self.sweep_masses.errors.append('sweep masses are required in sweep mode')
            return False

        return True

    def first_error(self):
        """(key, message) of the first failing field"""
        for name, messages in self.errors.items():
            if messages:
                return name, messages[0]
        return None, 'invalid configuration'
