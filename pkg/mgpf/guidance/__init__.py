from mgpf.guidance.latent_update import UpdateResult, guidance_objective, update_latent
from mgpf.guidance.losses import dist, language_guided_loss, mask_guided_loss, total_loss
