from .container import load_checkpoint, load_mel, save_checkpoint, save_mel
from .frontend import (
    compute_mel,
    griffin_lim_invert,
    load_wav,
    mel_duration_seconds,
    mel_filterbank,
    resample_clip,
    save_wav,
    seconds_to_frames,
)
